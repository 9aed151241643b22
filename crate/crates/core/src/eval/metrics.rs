use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::{BlockGrid, SparseRatings};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockMetric {
    pub i: usize,
    pub j: usize,
    pub n_cells: usize,
    /// `None` for blocks without test cells.
    pub rmse: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rmse: f64,
    pub n_cells: usize,
    pub per_block: Vec<BlockMetric>,
}

/// Root-mean-square error of `(row, col, prediction)` triples against every
/// cell of `truth`. Each truth cell needs exactly one prediction.
pub fn rmse(predictions: &[(usize, usize, f64)], truth: &SparseRatings) -> Result<MetricReport> {
    let errors = squared_errors(predictions, truth)?;
    Ok(MetricReport {
        rmse: root_mean(&errors),
        n_cells: errors.len(),
        per_block: Vec::new(),
    })
}

/// [`rmse`] plus a breakdown over the blocks of `grid`.
pub fn rmse_by_block(
    predictions: &[(usize, usize, f64)],
    truth: &SparseRatings,
    grid: &BlockGrid,
) -> Result<MetricReport> {
    let errors = squared_errors(predictions, truth)?;
    let (ni, nj) = grid.shape();
    let mut per_block: Vec<Vec<f64>> = vec![Vec::new(); ni * nj];
    for (r, &e) in truth.entries().iter().zip(&errors) {
        let ((i, j), _) = grid.locate(r.row, r.col);
        per_block[i * nj + j].push(e);
    }
    Ok(MetricReport {
        rmse: root_mean(&errors),
        n_cells: errors.len(),
        per_block: per_block
            .iter()
            .enumerate()
            .map(|(b, errs)| BlockMetric {
                i: b / nj,
                j: b % nj,
                n_cells: errs.len(),
                rmse: (!errs.is_empty()).then(|| root_mean(errs)),
            })
            .collect(),
    })
}

/// RMSE of predicting the training mean everywhere.
pub fn global_mean_rmse(train: &SparseRatings, test: &SparseRatings) -> Result<f64> {
    let mean = train
        .mean_value()
        .ok_or_else(|| Error::InvalidArgument("empty training set".into()))?;
    let preds: Vec<_> = test
        .entries()
        .iter()
        .map(|r| (r.row, r.col, mean))
        .collect();
    Ok(rmse(&preds, test)?.rmse)
}

fn squared_errors(predictions: &[(usize, usize, f64)], truth: &SparseRatings) -> Result<Vec<f64>> {
    if truth.is_empty() {
        return Err(Error::InvalidArgument("no truth cells to score".into()));
    }
    let mut by_cell = HashMap::with_capacity(predictions.len());
    for &(r, c, p) in predictions {
        if by_cell.insert((r, c), p).is_some() {
            return Err(Error::InvalidArgument(format!(
                "two predictions for cell ({r}, {c})"
            )));
        }
    }
    let mut missing = Vec::new();
    let mut errors = Vec::with_capacity(truth.len());
    for t in truth.entries() {
        match by_cell.remove(&t.cell()) {
            Some(p) => errors.push((p - t.value).powi(2)),
            None => missing.push(t.cell()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Coverage { missing });
    }
    if let Some(&(r, c)) = by_cell.keys().min() {
        return Err(Error::InvalidArgument(format!(
            "prediction for cell ({r}, {c}) not in the truth set"
        )));
    }
    Ok(errors)
}

fn root_mean(squares: &[f64]) -> f64 {
    (squares.iter().sum::<f64>() / squares.len() as f64).sqrt()
}
