use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::aggregate::{aggregate_posteriors, AggregatedPosterior, BlockSummaries};
use super::checkpoint::BlockCheckpoint;
use super::plan::{allocate_workers, PhasePlan};
use super::report::{BlockReport, PhaseReport, RunMetrics, RunReport};
use super::{BlockId, Phase};
use crate::data::{partition_blocks, Block, BlockGrid, SparseRatings};
use crate::eval::rmse;
use crate::gibbs::{
    propagated_prior, run_chain, BlockPriors, ChainContext, ChainOutput, ModelConfig, SidePrior,
};
use crate::posterior::{predict_cells, CellPrediction, GaussianRowSummary};
use crate::{Error, Result};

/// Which posterior produces test-cell predictions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictMode {
    /// Average of per-sample predictions from the chain of the cell's block.
    #[default]
    Block,
    /// Plug-in prediction from the aggregated whole-matrix posterior.
    Aggregated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub workers: usize,
    pub seed: u64,
    pub clamp: bool,
    pub predict: PredictMode,
    /// Persist block results here at every phase boundary, and reuse any
    /// matching results already present.
    pub checkpoint_dir: Option<PathBuf>,
}

impl RunOptions {
    pub fn new(workers: usize, seed: u64) -> Self {
        RunOptions {
            workers,
            seed,
            clamp: false,
            predict: PredictMode::Block,
            checkpoint_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockOutput {
    pub id: BlockId,
    pub phase: Phase,
    /// Global row of each local row.
    pub rows: Vec<usize>,
    /// Global column of each local column.
    pub cols: Vec<usize>,
    pub nnz: usize,
    /// Positions in the test set of the block's query cells.
    pub test_index: Vec<usize>,
    pub chain: ChainOutput,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanOutput {
    shape: (usize, usize),
    /// Row-major over the grid.
    pub blocks: Vec<BlockOutput>,
    /// Subtracted from every rating before sampling.
    pub offset: f64,
    /// Per-block predictions, in test-set order.
    pub block_predictions: Vec<CellPrediction>,
    /// Present when run with [`PredictMode::Aggregated`].
    pub aggregated: Option<AggregatedPosterior>,
    pub aggregated_predictions: Option<Vec<CellPrediction>>,
    pub report: RunReport,
}

impl PlanOutput {
    pub fn block(&self, id: BlockId) -> &BlockOutput {
        &self.blocks[id.i * self.shape.1 + id.j]
    }

    /// Predictions of the requested mode, in test-set order.
    pub fn predictions(&self, mode: PredictMode) -> Option<&[CellPrediction]> {
        match mode {
            PredictMode::Block => Some(&self.block_predictions),
            PredictMode::Aggregated => self.aggregated_predictions.as_deref(),
        }
    }
}

impl BlockSummaries for PlanOutput {
    fn u(&self, block: BlockId) -> &[GaussianRowSummary] {
        &self.block(block).chain.u
    }

    fn v(&self, block: BlockId) -> &[GaussianRowSummary] {
        &self.block(block).chain.v
    }
}

struct Finished {
    chain: ChainOutput,
    threads: usize,
    seconds: f64,
    start_seq: u64,
    end_seq: u64,
    resumed: bool,
}

/// Runs the chains of every block in phase order. Blocks within a phase run
/// concurrently on up to `workers` runners; spare workers become row-update
/// threads inside blocks. Results do not depend on the worker count.
pub fn execute_plan(
    plan: &PhasePlan,
    train: &SparseRatings,
    grid: &BlockGrid,
    test: &SparseRatings,
    config: &ModelConfig,
    options: &RunOptions,
) -> Result<PlanOutput> {
    config.validate()?;
    if options.workers == 0 {
        return Err(Error::InvalidArgument(
            "at least one worker is required".into(),
        ));
    }
    if plan.shape() != grid.shape() {
        return Err(Error::InvalidArgument(format!(
            "plan is {:?}, grid is {:?}",
            plan.shape(),
            grid.shape()
        )));
    }
    let dims = (train.n_rows(), train.n_cols());
    if dims != (grid.n_rows(), grid.n_cols()) || dims != (test.n_rows(), test.n_cols()) {
        return Err(Error::InvalidArgument(format!(
            "train is {}x{}, test is {}x{}, grid is {}x{}",
            dims.0,
            dims.1,
            test.n_rows(),
            test.n_cols(),
            grid.n_rows(),
            grid.n_cols()
        )));
    }

    let (ni, nj) = grid.shape();
    let offset = train.mean_value().unwrap_or(0.0);
    let blocks = partition_blocks(train, grid)?;
    let mut queries = vec![Vec::new(); ni * nj];
    let mut test_index = vec![Vec::new(); ni * nj];
    for (t, r) in test.entries().iter().enumerate() {
        let ((i, j), cell) = grid.locate(r.row, r.col);
        queries[i * nj + j].push(cell);
        test_index[i * nj + j].push(t);
    }
    let fingerprint = run_fingerprint(train, grid, config, options.seed, offset);

    let seq = AtomicU64::new(0);
    let mut done: Vec<Option<Finished>> = (0..ni * nj).map(|_| None).collect();
    let mut phases = Vec::with_capacity(3);

    for phase in Phase::ALL {
        let ids = plan.blocks(phase);
        let start = Instant::now();
        let sizes: Vec<usize> = ids
            .iter()
            .map(|id| grid.rows().group_len(id.i) + grid.cols().group_len(id.j))
            .collect();
        let threads = allocate_workers(&sizes, options.workers);
        let results: Vec<Mutex<Option<Result<Finished>>>> =
            ids.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let failed = AtomicBool::new(false);
        let runners = options.workers.min(ids.len());

        let run_one = |k: usize| -> Result<Finished> {
            let id = ids[k];
            let b = id.i * nj + id.j;
            let block = &blocks[b];
            let start_seq = seq.fetch_add(1, Ordering::SeqCst);
            if let Some(dir) = &options.checkpoint_dir {
                if let Some(cp) = BlockCheckpoint::load(dir, id)? {
                    if cp.fingerprint == fingerprint && cp.query == queries[b] {
                        let chain = cp.to_chain_output()?;
                        return Ok(Finished {
                            seconds: chain.sweep_seconds.iter().sum(),
                            chain,
                            threads: threads[k],
                            start_seq,
                            end_seq: seq.fetch_add(1, Ordering::SeqCst),
                            resumed: true,
                        });
                    }
                }
            }
            let priors = block_priors(plan, id, &done)?;
            let ctx = ChainContext {
                seed: options.seed,
                block: (id.i, id.j),
                rating_offset: offset,
                threads: threads[k],
            };
            let clock = Instant::now();
            let chain = run_chain(&block.ratings, &priors, &queries[b], config, &ctx)?;
            Ok(Finished {
                chain,
                threads: threads[k],
                seconds: clock.elapsed().as_secs_f64(),
                start_seq,
                end_seq: seq.fetch_add(1, Ordering::SeqCst),
                resumed: false,
            })
        };

        std::thread::scope(|s| {
            for _ in 0..runners {
                s.spawn(|| loop {
                    if failed.load(Ordering::SeqCst) {
                        break;
                    }
                    let k = next.fetch_add(1, Ordering::SeqCst);
                    if k >= ids.len() {
                        break;
                    }
                    let outcome = run_one(k);
                    if outcome.is_err() {
                        failed.store(true, Ordering::SeqCst);
                    }
                    *results[k].lock().expect("result slot poisoned") = Some(outcome);
                });
            }
        });

        // The lowest failing index wins so the reported block does not
        // depend on thread timing.
        let mut finished = Vec::with_capacity(ids.len());
        for (k, slot) in results.into_iter().enumerate() {
            match slot.into_inner().expect("result slot poisoned") {
                Some(Ok(f)) => finished.push(f),
                Some(Err(e)) => {
                    return Err(Error::Block {
                        block: ids[k],
                        source: Box::new(e),
                    })
                }
                None => {}
            }
        }
        if finished.len() != ids.len() {
            unreachable!("a phase ended without results or an error");
        }
        let seconds = start.elapsed().as_secs_f64();

        if let Some(dir) = &options.checkpoint_dir {
            for (&id, f) in ids.iter().zip(&finished) {
                let b = id.i * nj + id.j;
                if !f.resumed {
                    BlockCheckpoint::new(
                        &fingerprint,
                        id,
                        phase,
                        blocks[b].ratings.len(),
                        &queries[b],
                        &f.chain,
                    )
                    .save(dir)?;
                }
            }
        }

        phases.push(PhaseReport {
            phase,
            blocks: ids.len(),
            seconds,
            block_seconds: finished.iter().map(|f| f.seconds).sum(),
        });
        for (&id, f) in ids.iter().zip(finished) {
            done[id.i * nj + id.j] = Some(f);
        }
    }

    let done: Vec<Finished> = done
        .into_iter()
        .map(|f| f.expect("every block belongs to a phase"))
        .collect();
    assemble(
        plan, grid, train, test, config, options, offset, blocks, test_index, done, phases,
    )
}

fn block_priors(plan: &PhasePlan, id: BlockId, done: &[Option<Finished>]) -> Result<BlockPriors> {
    let nj = plan.shape().1;
    let sources = plan.sources(id);
    let finished = |src: BlockId| {
        done[src.i * nj + src.j].as_ref().ok_or_else(|| {
            Error::InvalidArgument(format!("block {id} started before its source {src}"))
        })
    };
    Ok(BlockPriors {
        u: match sources.u {
            None => SidePrior::Hierarchical,
            Some(src) => propagated_prior(&finished(src)?.chain.u)?,
        },
        v: match sources.v {
            None => SidePrior::Hierarchical,
            Some(src) => propagated_prior(&finished(src)?.chain.v)?,
        },
    })
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    plan: &PhasePlan,
    grid: &BlockGrid,
    train: &SparseRatings,
    test: &SparseRatings,
    config: &ModelConfig,
    options: &RunOptions,
    offset: f64,
    blocks: Vec<Block>,
    test_index: Vec<Vec<usize>>,
    done: Vec<Finished>,
    phases: Vec<PhaseReport>,
) -> Result<PlanOutput> {
    let scale = train.scale();
    let mut block_predictions = vec![
        CellPrediction {
            mean: f64::NAN,
            variance: f64::NAN,
        };
        test.len()
    ];
    let mut reports = Vec::with_capacity(blocks.len());
    let mut outputs = Vec::with_capacity(blocks.len());
    for ((block, index), f) in blocks.into_iter().zip(test_index).zip(done) {
        let id = BlockId::new(block.i, block.j);
        let preds =
            predict_cells(&f.chain.predictions, config.tau, scale, options.clamp).map_err(|e| {
                Error::Block {
                    block: id,
                    source: Box::new(e),
                }
            })?;
        for (&t, p) in index.iter().zip(preds) {
            block_predictions[t] = p;
        }
        reports.push(BlockReport {
            phase: plan.phase_of(id),
            i: id.i,
            j: id.j,
            rows: block.rows.len(),
            cols: block.cols.len(),
            nnz: block.ratings.len(),
            sweeps: f.chain.sweep_seconds.len(),
            threads: f.threads,
            seconds: f.seconds,
            start_seq: f.start_seq,
            end_seq: f.end_seq,
            resumed: f.resumed,
        });
        outputs.push(BlockOutput {
            id,
            phase: plan.phase_of(id),
            rows: block.rows,
            cols: block.cols,
            nnz: block.ratings.len(),
            test_index: index,
            chain: f.chain,
        });
    }

    let mut output = PlanOutput {
        shape: grid.shape(),
        blocks: outputs,
        offset,
        block_predictions,
        aggregated: None,
        aggregated_predictions: None,
        report: RunReport {
            seed: options.seed,
            workers: options.workers,
            grid: grid.shape(),
            blocks: Vec::new(),
            phases: Vec::new(),
            total_seconds: 0.0,
            sweeps: 0,
            row_updates: 0,
            rating_visits: 0,
            rows_per_sec: 0.0,
            ratings_per_sec: 0.0,
            metrics: RunMetrics::default(),
        },
    };
    if options.predict == PredictMode::Aggregated {
        let agg = aggregate_posteriors(grid, &output, config.jitter)?;
        let preds = test
            .entries()
            .iter()
            .map(|r| {
                let mut p = agg.predict(r.row, r.col, offset, config.tau);
                if options.clamp {
                    p.mean = scale.clamp(p.mean);
                }
                p
            })
            .collect();
        output.aggregated = Some(agg);
        output.aggregated_predictions = Some(preds);
    }

    let score = |preds: &[CellPrediction]| -> Result<Option<f64>> {
        if test.is_empty() {
            return Ok(None);
        }
        let cells: Vec<_> = test
            .entries()
            .iter()
            .zip(preds)
            .map(|(r, p)| (r.row, r.col, p.mean))
            .collect();
        Ok(Some(rmse(&cells, test)?.rmse))
    };
    let metrics = RunMetrics {
        n_test: test.len(),
        rmse_block: score(&output.block_predictions)?,
        rmse_aggregated: match &output.aggregated_predictions {
            Some(p) => score(p)?,
            None => None,
        },
    };

    let total_seconds: f64 = phases.iter().map(|p| p.seconds).sum();
    let row_updates: u64 = output.blocks.iter().map(|b| b.chain.row_updates).sum();
    let rating_visits: u64 = output.blocks.iter().map(|b| b.chain.rating_visits).sum();
    let per_sec = |x: u64| {
        if total_seconds > 0.0 {
            x as f64 / total_seconds
        } else {
            0.0
        }
    };
    output.report = RunReport {
        seed: options.seed,
        workers: options.workers,
        grid: grid.shape(),
        sweeps: reports.iter().map(|b| b.sweeps as u64).sum(),
        blocks: reports,
        phases,
        total_seconds,
        row_updates,
        rating_visits,
        rows_per_sec: per_sec(row_updates),
        ratings_per_sec: per_sec(rating_visits),
        metrics,
    };
    Ok(output)
}

/// Digest of everything that determines a block's chain, used to decide
/// whether a checkpointed block can be reused.
fn run_fingerprint(
    train: &SparseRatings,
    grid: &BlockGrid,
    config: &ModelConfig,
    seed: u64,
    offset: f64,
) -> String {
    let mut h = Sha256::new();
    h.update(format!("{seed}|{offset:e}|{config:?}|").as_bytes());
    h.update(serde_json::to_vec(&grid.to_file()).expect("grid file serializes"));
    for r in train.entries() {
        h.update(r.row.to_le_bytes());
        h.update(r.col.to_le_bytes());
        h.update(r.value.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
