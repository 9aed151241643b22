use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::conditional::{sample_hyperparams, sample_row, HyperParams};
use super::{dot, BlockAdjacency, FactorMatrix, ModelConfig, NormalWishartPrior};
use crate::data::SparseRatings;
use crate::posterior::{GaussianRowSummary, NaturalGaussian, PredictionAccumulator, RowMoments};
use crate::samplers::{sample_mvn, sample_wishart, RngStream, StreamTag};
use crate::{Error, Result};

/// Prior on the rows of one side of a block.
#[derive(Clone, Debug, PartialEq)]
pub enum SidePrior {
    /// Shared Gaussian prior whose mean and precision are resampled from a
    /// Normal-Wishart conditional every sweep.
    Hierarchical,
    /// Fixed per-row Gaussians propagated from an earlier block, indexed by
    /// local row.
    Propagated(Vec<NaturalGaussian>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockPriors {
    pub u: SidePrior,
    pub v: SidePrior,
}

impl BlockPriors {
    pub fn hierarchical() -> Self {
        BlockPriors {
            u: SidePrior::Hierarchical,
            v: SidePrior::Hierarchical,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    U = 0,
    V = 1,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::U => "U",
            Side::V => "V",
        }
    }
}

/// Keys the chain's random streams and carries its execution settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainContext {
    pub seed: u64,
    /// Grid coordinates of the block, part of every stream key.
    pub block: (usize, usize),
    /// Subtracted from ratings before sampling and added back to predictions.
    pub rating_offset: f64,
    /// Threads for row updates within a half-sweep.
    pub threads: usize,
}

impl ChainContext {
    pub fn new(seed: u64, block: (usize, usize)) -> Self {
        ChainContext {
            seed,
            block,
            rating_offset: 0.0,
            threads: 1,
        }
    }

    fn stream(&self, tag: StreamTag, tail: &[u64]) -> RngStream {
        let mut labels = vec![self.block.0 as u64, self.block.1 as u64];
        labels.extend_from_slice(tail);
        RngStream::tagged(self.seed, tag, &labels)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentBlockState {
    pub u: FactorMatrix,
    pub v: FactorMatrix,
    pub hyper_u: Option<HyperParams>,
    pub hyper_v: Option<HyperParams>,
    pub sweep: usize,
}

impl LatentBlockState {
    /// Factor entries i.i.d. `N(0, 1/K)`; hierarchical hyperparameters drawn
    /// from the Normal-Wishart prior.
    pub fn initialize(
        rows: usize,
        cols: usize,
        priors: &BlockPriors,
        config: &ModelConfig,
        ctx: &ChainContext,
    ) -> Result<Self> {
        let init_factors = |n: usize, side: Side| {
            let mut rng = ctx.stream(StreamTag::InitFactors, &[side as u64]);
            let sd = (1.0 / config.k as f64).sqrt();
            let mut f = FactorMatrix::zeros(n, config.k);
            for x in f.as_mut_slice() {
                *x = sd * rng.sample::<f64, _>(StandardNormal);
            }
            f
        };
        let init_hyper = |prior: &SidePrior, side: Side| -> Result<Option<HyperParams>> {
            match prior {
                SidePrior::Propagated(_) => Ok(None),
                SidePrior::Hierarchical => {
                    let mut rng = ctx.stream(StreamTag::InitHyper, &[side as u64]);
                    draw_from_hyperprior(&config.hyperprior, &mut rng).map(Some)
                }
            }
        };
        Ok(LatentBlockState {
            u: init_factors(rows, Side::U),
            v: init_factors(cols, Side::V),
            hyper_u: init_hyper(&priors.u, Side::U)?,
            hyper_v: init_hyper(&priors.v, Side::V)?,
            sweep: 0,
        })
    }
}

fn draw_from_hyperprior(prior: &NormalWishartPrior, rng: &mut RngStream) -> Result<HyperParams> {
    let lambda = sample_wishart(prior.w0(), prior.nu0(), rng)?;
    let mu = sample_mvn(prior.mu0(), &(&lambda * prior.beta0()), rng)?;
    Ok(HyperParams { mu, lambda })
}

/// One Gibbs sweep: hyperparameters then rows of `U` against the current `V`,
/// then the same for `V` against the updated `U`. Each half-sweep is a
/// barrier; rows inside it are independent and may run on `pool`.
pub fn gibbs_sweep(
    state: &mut LatentBlockState,
    block: &BlockAdjacency,
    priors: &BlockPriors,
    config: &ModelConfig,
    ctx: &ChainContext,
    pool: Option<&rayon::ThreadPool>,
) -> Result<()> {
    let sweep = state.sweep as u64;
    half_sweep(
        Side::U,
        &mut state.u,
        &mut state.hyper_u,
        &state.v,
        &priors.u,
        |r| block.row(r),
        config,
        ctx,
        sweep,
        pool,
    )?;
    half_sweep(
        Side::V,
        &mut state.v,
        &mut state.hyper_v,
        &state.u,
        &priors.v,
        |c| block.col(c),
        config,
        ctx,
        sweep,
        pool,
    )?;
    state.sweep += 1;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn half_sweep<'b>(
    side: Side,
    target: &mut FactorMatrix,
    hyper: &mut Option<HyperParams>,
    other: &FactorMatrix,
    prior: &SidePrior,
    ratings_of: impl Fn(usize) -> &'b [(usize, f64)] + Sync,
    config: &ModelConfig,
    ctx: &ChainContext,
    sweep: u64,
    pool: Option<&rayon::ThreadPool>,
) -> Result<()> {
    let shared = match prior {
        SidePrior::Hierarchical => {
            let mut rng = ctx.stream(StreamTag::HyperUpdate, &[side as u64, sweep]);
            let h = sample_hyperparams(target, &config.hyperprior, &mut rng)?;
            let natural = h.as_natural();
            *hyper = Some(h);
            Some(natural)
        }
        SidePrior::Propagated(rows) => {
            if rows.len() != target.rows() {
                return Err(Error::InvalidArgument(format!(
                    "{} propagated priors for {} {} rows",
                    rows.len(),
                    target.rows(),
                    side.name()
                )));
            }
            None
        }
    };
    let k = config.k;
    let update = |r: usize, out: &mut [f64]| -> Result<()> {
        let row_prior = match (&shared, prior) {
            (Some(s), _) => s,
            (None, SidePrior::Propagated(rows)) => &rows[r],
            (None, SidePrior::Hierarchical) => unreachable!("hierarchical prior always shared"),
        };
        let mut rng = ctx.stream(StreamTag::RowUpdate, &[side as u64, r as u64, sweep]);
        let ratings = ratings_of(r).iter().map(|&(o, val)| (other.row(o), val));
        let x = sample_row(
            &row_prior.precision,
            &row_prior.shift,
            config.tau,
            ratings,
            &mut rng,
        )?;
        out.copy_from_slice(x.as_slice());
        Ok(())
    };
    let data = target.as_mut_slice();
    match pool {
        Some(pool) if pool.current_num_threads() > 1 => pool.install(|| {
            data.par_chunks_mut(k)
                .enumerate()
                .try_for_each(|(r, out)| update(r, out))
        }),
        _ => data
            .chunks_mut(k)
            .enumerate()
            .try_for_each(|(r, out)| update(r, out)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainOutput {
    pub u: Vec<GaussianRowSummary>,
    pub v: Vec<GaussianRowSummary>,
    /// One accumulator per query cell, in query order.
    pub predictions: Vec<PredictionAccumulator>,
    pub sweep_seconds: Vec<f64>,
    pub row_updates: u64,
    /// Ratings visited by row updates (each rating twice per sweep).
    pub rating_visits: u64,
}

impl ChainOutput {
    pub fn is_finite(&self) -> bool {
        let summary_ok = |s: &GaussianRowSummary| {
            s.mean.iter().all(|x| x.is_finite()) && s.covariance.iter().all(|x| x.is_finite())
        };
        self.u.iter().all(summary_ok)
            && self.v.iter().all(summary_ok)
            && self
                .predictions
                .iter()
                .all(|p| p.mean.is_finite() && p.m2.is_finite())
    }
}

/// Runs `burn_in + samples` sweeps on one block, summarizing the retained
/// sweeps per row and accumulating predictions for `query_cells` (local
/// indices).
pub fn run_chain(
    block: &SparseRatings,
    priors: &BlockPriors,
    query_cells: &[(usize, usize)],
    config: &ModelConfig,
    ctx: &ChainContext,
) -> Result<ChainOutput> {
    config.validate()?;
    let (rows, cols) = (block.n_rows(), block.n_cols());
    check_prior_len(&priors.u, rows, Side::U, config.k)?;
    check_prior_len(&priors.v, cols, Side::V, config.k)?;
    if let Some(&(r, c)) = query_cells.iter().find(|&&(r, c)| r >= rows || c >= cols) {
        return Err(Error::InvalidArgument(format!(
            "query cell ({r}, {c}) outside {rows}x{cols} block"
        )));
    }

    let pool = if ctx.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(ctx.threads)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    let adjacency = BlockAdjacency::new(block, ctx.rating_offset);
    let mut state = LatentBlockState::initialize(rows, cols, priors, config, ctx)?;
    let mut moments_u = vec![RowMoments::new(config.k); rows];
    let mut moments_v = vec![RowMoments::new(config.k); cols];
    let mut predictions = vec![PredictionAccumulator::default(); query_cells.len()];
    let total = config.total_sweeps();
    let mut sweep_seconds = Vec::with_capacity(total);

    for sweep in 0..total {
        let start = Instant::now();
        gibbs_sweep(&mut state, &adjacency, priors, config, ctx, pool.as_ref())?;
        if sweep >= config.burn_in {
            for (m, x) in moments_u.iter_mut().zip(state.u.iter_rows()) {
                m.push(x);
            }
            for (m, x) in moments_v.iter_mut().zip(state.v.iter_rows()) {
                m.push(x);
            }
            for (acc, &(r, c)) in predictions.iter_mut().zip(query_cells) {
                acc.push(dot(state.u.row(r), state.v.row(c)) + ctx.rating_offset);
            }
        }
        sweep_seconds.push(start.elapsed().as_secs_f64());
    }

    let summarize = |m: &RowMoments| m.summary(config.ridge_eps, config.covariance);
    Ok(ChainOutput {
        u: moments_u.iter().map(summarize).collect(),
        v: moments_v.iter().map(summarize).collect(),
        predictions,
        sweep_seconds,
        row_updates: (total * (rows + cols)) as u64,
        rating_visits: (total * 2 * block.len()) as u64,
    })
}

fn check_prior_len(prior: &SidePrior, n: usize, side: Side, k: usize) -> Result<()> {
    if let SidePrior::Propagated(rows) = prior {
        if rows.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} propagated {} priors for {n} rows",
                rows.len(),
                side.name()
            )));
        }
        if let Some(bad) = rows.iter().position(|p| p.dim() != k) {
            return Err(Error::InvalidArgument(format!(
                "{} prior for row {bad} has dimension {}, K = {k}",
                side.name(),
                rows[bad].dim()
            )));
        }
    }
    Ok(())
}

/// Propagated priors from summaries of an earlier block.
pub fn propagated_prior(summaries: &[GaussianRowSummary]) -> Result<SidePrior> {
    summaries
        .iter()
        .map(crate::posterior::to_natural)
        .collect::<Result<Vec<_>>>()
        .map(SidePrior::Propagated)
}

/// Convenience for tests and tools: flat-zero natural prior of dimension `k`
/// with precision `precision · I`.
pub fn isotropic_prior(k: usize, precision: f64) -> NaturalGaussian {
    NaturalGaussian {
        precision: DMatrix::identity(k, k) * precision,
        shift: DVector::zeros(k),
    }
}
