//! Text form of row summaries: index, mean, and the covariance lower triangle
//! in row-major order.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::GaussianRowSummary;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub index: usize,
    pub n_samples: usize,
    pub mean: Vec<f64>,
    pub cov_lower: Vec<f64>,
}

impl SummaryRecord {
    pub fn new(index: usize, summary: &GaussianRowSummary) -> Self {
        let k = summary.dim();
        let mut cov_lower = Vec::with_capacity(k * (k + 1) / 2);
        for a in 0..k {
            for b in 0..=a {
                cov_lower.push(summary.covariance[(a, b)]);
            }
        }
        SummaryRecord {
            index,
            n_samples: summary.n_samples,
            mean: summary.mean.as_slice().to_vec(),
            cov_lower,
        }
    }

    pub fn to_summary(&self) -> Result<GaussianRowSummary> {
        let k = self.mean.len();
        if self.cov_lower.len() != k * (k + 1) / 2 {
            return Err(Error::Checkpoint(format!(
                "row {}: {} covariance terms for K = {k}",
                self.index,
                self.cov_lower.len()
            )));
        }
        let mut cov = DMatrix::zeros(k, k);
        let mut it = self.cov_lower.iter();
        for a in 0..k {
            for b in 0..=a {
                let v = *it.next().unwrap();
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        Ok(GaussianRowSummary {
            mean: DVector::from_column_slice(&self.mean),
            covariance: cov,
            n_samples: self.n_samples,
        })
    }
}

pub fn to_records(
    summaries: &[GaussianRowSummary],
    index_of: impl Fn(usize) -> usize,
) -> Vec<SummaryRecord> {
    summaries
        .iter()
        .enumerate()
        .map(|(local, s)| SummaryRecord::new(index_of(local), s))
        .collect()
}

pub fn from_records(records: &[SummaryRecord]) -> Result<Vec<GaussianRowSummary>> {
    records.iter().map(SummaryRecord::to_summary).collect()
}
