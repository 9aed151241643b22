use serde::{Deserialize, Serialize};

use super::GaussianRowSummary;
use crate::data::RatingScale;
use crate::{Error, Result};

/// Running mean and second central moment of per-sample predictions for one
/// query cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionAccumulator {
    pub n: usize,
    pub mean: f64,
    pub m2: f64,
}

impl PredictionAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Population variance of the pushed values.
    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m2 / self.n as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellPrediction {
    pub mean: f64,
    /// Spread of the sampled predictions plus observation noise `1/τ`.
    pub variance: f64,
}

pub fn predict_cells(
    accumulators: &[PredictionAccumulator],
    tau: f64,
    scale: RatingScale,
    clamp: bool,
) -> Result<Vec<CellPrediction>> {
    accumulators
        .iter()
        .enumerate()
        .map(|(k, acc)| {
            if acc.n == 0 {
                return Err(Error::InvalidArgument(format!(
                    "query cell {k} has no samples"
                )));
            }
            let mean = if clamp {
                scale.clamp(acc.mean)
            } else {
                acc.mean
            };
            Ok(CellPrediction {
                mean,
                variance: acc.variance() + 1.0 / tau,
            })
        })
        .collect()
}

/// Prediction for `u·v` with independent Gaussian posteriors on both factors.
pub fn predict_from_summaries(
    u: &GaussianRowSummary,
    v: &GaussianRowSummary,
    offset: f64,
    tau: f64,
) -> CellPrediction {
    let mean = u.mean.dot(&v.mean) + offset;
    let spread = (v.mean.transpose() * &u.covariance * &v.mean)[(0, 0)]
        + (u.mean.transpose() * &v.covariance * &u.mean)[(0, 0)]
        + (&u.covariance * &v.covariance).trace();
    CellPrediction {
        mean,
        variance: spread + 1.0 / tau,
    }
}
