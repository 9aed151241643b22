use super::BlockId;
use crate::data::BlockGrid;
use crate::posterior::{
    aggregate_row_posteriors, predict_from_summaries, to_natural, CellPrediction,
    GaussianRowSummary,
};
use crate::{Error, Result};

/// Row summaries of one side of every block, looked up by block.
pub trait BlockSummaries {
    fn u(&self, block: BlockId) -> &[GaussianRowSummary];
    fn v(&self, block: BlockId) -> &[GaussianRowSummary];
}

/// Whole-matrix posteriors, indexed by global row and column.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregatedPosterior {
    pub u: Vec<GaussianRowSummary>,
    pub v: Vec<GaussianRowSummary>,
}

impl AggregatedPosterior {
    pub fn predict(&self, row: usize, col: usize, offset: f64, tau: f64) -> CellPrediction {
        predict_from_summaries(&self.u[row], &self.v[col], offset, tau)
    }
}

/// Combines each row's block posteriors across its row group (and each
/// column's across its column group). The propagated prior of row group `i`
/// is the `U` posterior of block `(i, 0)`, counted `J − 1` extra times; the
/// column side mirrors this with `(0, j)`.
pub fn aggregate_posteriors(
    grid: &BlockGrid,
    blocks: &impl BlockSummaries,
    jitter: f64,
) -> Result<AggregatedPosterior> {
    let (ni, nj) = grid.shape();
    let mut u = vec![None; grid.n_rows()];
    for i in 0..ni {
        let prior = blocks.u(BlockId::new(i, 0));
        let members = grid.rows().members(i);
        let per_block: Vec<&[GaussianRowSummary]> =
            (0..nj).map(|j| blocks.u(BlockId::new(i, j))).collect();
        for (local, &global) in members.iter().enumerate() {
            let row = aggregate_one(&per_block, prior, local, jitter)
                .map_err(|e| aggregation_error("U", global, e))?;
            u[global] = Some(row);
        }
    }
    let mut v = vec![None; grid.n_cols()];
    for j in 0..nj {
        let prior = blocks.v(BlockId::new(0, j));
        let members = grid.cols().members(j);
        let per_block: Vec<&[GaussianRowSummary]> =
            (0..ni).map(|i| blocks.v(BlockId::new(i, j))).collect();
        for (local, &global) in members.iter().enumerate() {
            let col = aggregate_one(&per_block, prior, local, jitter)
                .map_err(|e| aggregation_error("V", global, e))?;
            v[global] = Some(col);
        }
    }
    Ok(AggregatedPosterior {
        u: u.into_iter()
            .map(|x| x.expect("every row is in one group"))
            .collect(),
        v: v.into_iter()
            .map(|x| x.expect("every column is in one group"))
            .collect(),
    })
}

fn aggregate_one(
    per_block: &[&[GaussianRowSummary]],
    prior: &[GaussianRowSummary],
    local: usize,
    jitter: f64,
) -> Result<GaussianRowSummary> {
    fn lookup(s: &[GaussianRowSummary], local: usize) -> Result<&GaussianRowSummary> {
        s.get(local).ok_or_else(|| {
            Error::InvalidData(format!("block summary is missing local row {local}"))
        })
    }
    if per_block.len() == 1 {
        return Ok(lookup(per_block[0], local)?.clone());
    }
    let posteriors = per_block
        .iter()
        .map(|s| to_natural(lookup(s, local)?))
        .collect::<Result<Vec<_>>>()?;
    let prior = to_natural(lookup(prior, local)?)?;
    aggregate_row_posteriors(&posteriors, &prior, per_block.len() - 1, jitter)
}

fn aggregation_error(side: &'static str, row: usize, source: Error) -> Error {
    Error::Aggregation {
        side,
        row,
        source: Box::new(source),
    }
}
