use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::samplers::{cholesky, max_abs, symmetrize};
use crate::{Error, Result};

/// How much of the sample covariance a row summary keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceMode {
    #[default]
    Full,
    /// Off-diagonal terms dropped.
    Diagonal,
}

/// Moment-matched Gaussian for one row of `U` or `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianRowSummary {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub n_samples: usize,
}

impl GaussianRowSummary {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Gaussian in natural parameters: precision `P` and shift `h = P·mean`.
/// Products and quotients of densities are sums and differences here.
#[derive(Clone, Debug, PartialEq)]
pub struct NaturalGaussian {
    pub precision: DMatrix<f64>,
    pub shift: DVector<f64>,
}

impl NaturalGaussian {
    /// `P = 0, h = 0`: the flat density, identity for multiplication.
    pub fn flat(k: usize) -> Self {
        NaturalGaussian {
            precision: DMatrix::zeros(k, k),
            shift: DVector::zeros(k),
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// The density raised to the power `exponent`.
    pub fn powf(&self, exponent: f64) -> Self {
        NaturalGaussian {
            precision: &self.precision * exponent,
            shift: &self.shift * exponent,
        }
    }

    pub fn to_moment(&self, n_samples: usize) -> Result<GaussianRowSummary> {
        let factor = cholesky(&self.precision)?;
        Ok(GaussianRowSummary {
            mean: factor.solve(&self.shift),
            covariance: factor.inverse(),
            n_samples,
        })
    }
}

/// Streaming mean and scatter (Welford) of one row's retained samples.
#[derive(Clone, Debug)]
pub struct RowMoments {
    n: usize,
    mean: DVector<f64>,
    scatter: DMatrix<f64>,
    delta: Vec<f64>,
}

impl RowMoments {
    pub fn new(k: usize) -> Self {
        RowMoments {
            n: 0,
            mean: DVector::zeros(k),
            scatter: DMatrix::zeros(k, k),
            delta: vec![0.0; k],
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let k = self.mean.len();
        let inv_n = 1.0 / self.n as f64;
        for a in 0..k {
            self.delta[a] = x[a] - self.mean[a];
            self.mean[a] += self.delta[a] * inv_n;
        }
        for a in 0..k {
            let after = x[a] - self.mean[a];
            for b in 0..=a {
                self.scatter[(a, b)] += self.delta[b] * after;
            }
        }
    }

    /// Sample mean and `n − 1` covariance, regularized by
    /// `ridge_eps · (trace / K) · I` (or `ridge_eps · I` when the trace is 0).
    pub fn summary(&self, ridge_eps: f64, mode: CovarianceMode) -> GaussianRowSummary {
        let k = self.mean.len();
        let mut cov = DMatrix::<f64>::zeros(k, k);
        if self.n > 1 {
            let denom = (self.n - 1) as f64;
            for a in 0..k {
                for b in 0..=a {
                    let v = self.scatter[(a, b)] / denom;
                    cov[(a, b)] = v;
                    cov[(b, a)] = v;
                }
            }
        }
        if mode == CovarianceMode::Diagonal {
            cov = DMatrix::from_diagonal(&cov.diagonal());
        }
        let trace = cov.trace();
        let ridge = if trace > 0.0 {
            ridge_eps * trace / k as f64
        } else {
            ridge_eps
        };
        for a in 0..k {
            cov[(a, a)] += ridge;
        }
        GaussianRowSummary {
            mean: self.mean.clone(),
            covariance: cov,
            n_samples: self.n,
        }
    }
}

/// Per-row summaries of retained samples: `samples[row][sweep]`.
pub fn summarize_rows(
    samples: &[Vec<DVector<f64>>],
    ridge_eps: f64,
    mode: CovarianceMode,
) -> Result<Vec<GaussianRowSummary>> {
    samples
        .iter()
        .enumerate()
        .map(|(row, draws)| {
            let first = draws
                .first()
                .ok_or_else(|| Error::InvalidArgument(format!("row {row} has no samples")))?;
            let mut m = RowMoments::new(first.len());
            for d in draws {
                m.push(d.as_slice());
            }
            Ok(m.summary(ridge_eps, mode))
        })
        .collect()
}

pub fn to_natural(summary: &GaussianRowSummary) -> Result<NaturalGaussian> {
    let factor = cholesky(&summary.covariance)?;
    let precision = factor.inverse();
    let shift = &precision * &summary.mean;
    Ok(NaturalGaussian { precision, shift })
}

pub fn gaussian_multiply(a: &NaturalGaussian, b: &NaturalGaussian) -> NaturalGaussian {
    NaturalGaussian {
        precision: &a.precision + &b.precision,
        shift: &a.shift + &b.shift,
    }
}

/// `num / den` in natural parameters. A non-positive-definite difference is
/// repaired with `jitter · I`, growing ×10 while at most `1e-2 · ‖P‖_max`.
pub fn gaussian_divide(
    num: &NaturalGaussian,
    den: &NaturalGaussian,
    jitter: f64,
) -> Result<NaturalGaussian> {
    let mut precision = &num.precision - &den.precision;
    symmetrize(&mut precision);
    let shift = &num.shift - &den.shift;
    let mut last = match cholesky(&precision) {
        Ok(_) => return Ok(NaturalGaussian { precision, shift }),
        Err(e) => e,
    };
    let limit = 1e-2 * max_abs(&precision);
    let k = precision.nrows();
    let mut j = jitter;
    while j > 0.0 && j <= limit {
        let candidate = &precision + DMatrix::<f64>::identity(k, k) * j;
        match cholesky(&candidate) {
            Ok(_) => {
                return Ok(NaturalGaussian {
                    precision: candidate,
                    shift,
                })
            }
            Err(e) => last = e,
        }
        j *= 10.0;
    }
    Err(last)
}

/// Combines `L` block posteriors of one row that all descend from the same
/// propagated prior: `P = Σ P_ℓ − (L−1)·P_prior`, likewise for `h`.
pub fn aggregate_natural(
    posteriors: &[NaturalGaussian],
    prior: &NaturalGaussian,
    times_counted: usize,
    jitter: f64,
) -> Result<NaturalGaussian> {
    let (first, rest) = posteriors
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("aggregating zero posteriors".into()))?;
    if times_counted + 1 != posteriors.len() {
        return Err(Error::InvalidArgument(format!(
            "prior counted {times_counted} extra times for {} posteriors",
            posteriors.len()
        )));
    }
    if rest.is_empty() {
        return Ok(first.clone());
    }
    let product = rest
        .iter()
        .fold(first.clone(), |acc, p| gaussian_multiply(&acc, p));
    gaussian_divide(&product, &prior.powf(times_counted as f64), jitter)
}

/// [`aggregate_natural`] converted back to moment form. The summary's
/// `n_samples` records how many block posteriors were combined.
pub fn aggregate_row_posteriors(
    posteriors: &[NaturalGaussian],
    prior: &NaturalGaussian,
    times_counted: usize,
    jitter: f64,
) -> Result<GaussianRowSummary> {
    aggregate_natural(posteriors, prior, times_counted, jitter)?.to_moment(posteriors.len())
}
