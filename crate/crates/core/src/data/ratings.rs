use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl Rating {
    pub fn new(row: usize, col: usize, value: f64) -> Self {
        Rating { row, col, value }
    }

    pub fn cell(&self) -> (usize, usize) {
        (self.row, self.col)
    }
}

/// Closed interval of admissible rating values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl RatingScale {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min <= max) {
            return Err(Error::InvalidArgument(format!(
                "invalid rating scale [{min}, {max}]"
            )));
        }
        Ok(RatingScale { min, max })
    }

    pub fn observed(entries: &[Rating]) -> Self {
        if entries.is_empty() {
            return RatingScale { min: 0.0, max: 0.0 };
        }
        let (min, max) = entries
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.value), hi.max(r.value))
            });
        RatingScale { min, max }
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }
}

/// The observed entries of an `n_rows × n_cols` ratings matrix.
///
/// Entries keep the order they were supplied in; every consumer that sums
/// over them does so in that order, which keeps results reproducible.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRatings {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<Rating>,
    scale: RatingScale,
}

impl SparseRatings {
    /// Validates bounds, uniqueness and scale membership. Without an explicit
    /// scale the observed min/max is used.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        entries: Vec<Rating>,
        scale: Option<RatingScale>,
    ) -> Result<Self> {
        let scale = scale.unwrap_or_else(|| RatingScale::observed(&entries));
        let mut seen = HashSet::with_capacity(entries.len());
        for (k, r) in entries.iter().enumerate() {
            if r.row >= n_rows || r.col >= n_cols {
                return Err(Error::InvalidData(format!(
                    "entry {k} at ({}, {}) outside {n_rows}x{n_cols}",
                    r.row, r.col
                )));
            }
            if !r.value.is_finite() || !scale.contains(r.value) {
                return Err(Error::InvalidData(format!(
                    "entry {k} value {} outside scale [{}, {}]",
                    r.value, scale.min, scale.max
                )));
            }
            if !seen.insert((r.row, r.col)) {
                return Err(Error::InvalidData(format!(
                    "duplicate entry at ({}, {})",
                    r.row, r.col
                )));
            }
        }
        Ok(SparseRatings {
            n_rows,
            n_cols,
            entries,
            scale,
        })
    }

    /// Builds a structure whose invariants the caller has already established.
    pub(crate) fn from_parts_unchecked(
        n_rows: usize,
        n_cols: usize,
        entries: Vec<Rating>,
        scale: RatingScale,
    ) -> Self {
        SparseRatings {
            n_rows,
            n_cols,
            entries,
            scale,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn entries(&self) -> &[Rating] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn with_scale(self, scale: RatingScale) -> Result<Self> {
        SparseRatings::new(self.n_rows, self.n_cols, self.entries, Some(scale))
    }

    pub fn mean_value(&self) -> Option<f64> {
        if self.entries.is_empty() {
            return None;
        }
        Some(self.entries.iter().map(|r| r.value).sum::<f64>() / self.entries.len() as f64)
    }
}

/// Shape statistics of a ratings matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_ratings: usize,
    /// Matrix cells per observed rating.
    pub sparsity: f64,
    pub ratings_per_row: f64,
    pub rows_per_col_ratio: f64,
}

pub fn compute_stats(data: &SparseRatings) -> Result<DatasetStats> {
    if data.is_empty() {
        return Err(Error::InvalidData("statistics of an empty matrix".into()));
    }
    Ok(stats_from_counts(data.n_rows(), data.n_cols(), data.len()))
}

pub(crate) fn stats_from_counts(n_rows: usize, n_cols: usize, n_ratings: usize) -> DatasetStats {
    let (r, c, n) = (n_rows as f64, n_cols as f64, n_ratings as f64);
    DatasetStats {
        n_rows,
        n_cols,
        n_ratings,
        sparsity: r * c / n,
        ratings_per_row: n / r,
        rows_per_col_ratio: r / c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_bounds_and_duplicates() {
        let oob = SparseRatings::new(2, 2, vec![Rating::new(2, 0, 1.0)], None);
        assert!(matches!(oob, Err(Error::InvalidData(_))));
        let dup = SparseRatings::new(
            2,
            2,
            vec![Rating::new(0, 0, 1.0), Rating::new(0, 0, 2.0)],
            None,
        );
        assert!(matches!(dup, Err(Error::InvalidData(_))));
    }

    #[test]
    fn rejects_value_outside_declared_scale() {
        let scale = RatingScale::new(1.0, 5.0).unwrap();
        let r = SparseRatings::new(1, 1, vec![Rating::new(0, 0, 6.0)], Some(scale));
        assert!(r.is_err());
    }

    #[test]
    fn scale_defaults_to_observed_range() {
        let r = SparseRatings::new(
            2,
            2,
            vec![Rating::new(0, 0, 2.0), Rating::new(1, 1, 4.5)],
            None,
        )
        .unwrap();
        assert_eq!(r.scale(), RatingScale { min: 2.0, max: 4.5 });
    }

    #[test]
    fn dense_two_by_two_has_unit_sparsity() {
        let entries = (0..2)
            .flat_map(|i| (0..2).map(move |j| Rating::new(i, j, 1.0)))
            .collect();
        let s = compute_stats(&SparseRatings::new(2, 2, entries, None).unwrap()).unwrap();
        assert_eq!(s.sparsity, 1.0);
        assert_eq!(s.ratings_per_row, 2.0);
    }

    #[test]
    fn table_scale_statistics() {
        // Movielens-20M and Netflix shapes.
        let ml = stats_from_counts(138_500, 27_300, 20_000_000);
        assert!((ml.sparsity - 189.0).abs() < 0.5, "{}", ml.sparsity);
        assert!((ml.ratings_per_row - 144.0).abs() < 0.5);
        assert!((ml.rows_per_col_ratio - 5.1).abs() < 0.05);
        let nf = stats_from_counts(480_200, 17_800, 100_500_000);
        assert!((nf.rows_per_col_ratio - 27.0).abs() < 0.05);
        assert!((nf.sparsity - 85.0).abs() < 0.5);
        assert!((nf.ratings_per_row - 209.0).abs() < 0.5);
    }

    #[test]
    fn empty_stats_is_an_error() {
        let r = SparseRatings::new(3, 3, vec![], None).unwrap();
        assert!(compute_stats(&r).is_err());
    }
}
