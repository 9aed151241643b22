use crate::data::SparseRatings;

/// Row-major `rows × K` factor matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorMatrix {
    k: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(rows: usize, k: usize) -> Self {
        FactorMatrix {
            k,
            data: vec![0.0; rows * k],
        }
    }

    pub fn from_rows(k: usize, rows: &[Vec<f64>]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * k);
        for r in rows {
            assert_eq!(r.len(), k, "row length differs from K");
            data.extend_from_slice(r);
        }
        FactorMatrix { k, data }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.data.len() / self.k
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.k..(r + 1) * self.k]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.k..(r + 1) * self.k]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.k)
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Compressed per-row and per-column views of a block, with ratings stored
/// relative to an offset.
#[derive(Clone, Debug)]
pub struct BlockAdjacency {
    row_offsets: Vec<usize>,
    row_entries: Vec<(usize, f64)>,
    col_offsets: Vec<usize>,
    col_entries: Vec<(usize, f64)>,
}

impl BlockAdjacency {
    pub fn new(block: &SparseRatings, offset: f64) -> Self {
        let (row_offsets, row_entries) = compress(
            block.n_rows(),
            block
                .entries()
                .iter()
                .map(|r| (r.row, r.col, r.value - offset)),
        );
        let (col_offsets, col_entries) = compress(
            block.n_cols(),
            block
                .entries()
                .iter()
                .map(|r| (r.col, r.row, r.value - offset)),
        );
        BlockAdjacency {
            row_offsets,
            row_entries,
            col_offsets,
            col_entries,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.col_offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.row_entries.len()
    }

    /// `(col, centered value)` pairs of row `r`, in input order.
    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.row_entries[self.row_offsets[r]..self.row_offsets[r + 1]]
    }

    /// `(row, centered value)` pairs of column `c`, in input order.
    pub fn col(&self, c: usize) -> &[(usize, f64)] {
        &self.col_entries[self.col_offsets[c]..self.col_offsets[c + 1]]
    }
}

fn compress(
    n: usize,
    items: impl Iterator<Item = (usize, usize, f64)> + Clone,
) -> (Vec<usize>, Vec<(usize, f64)>) {
    let mut offsets = vec![0usize; n + 1];
    for (major, _, _) in items.clone() {
        offsets[major + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut entries = vec![(0, 0.0); offsets[n]];
    for (major, minor, v) in items {
        entries[fill[major]] = (minor, v);
        fill[major] += 1;
    }
    (offsets, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Rating;

    #[test]
    fn adjacency_views() {
        let data = SparseRatings::new(
            2,
            3,
            vec![
                Rating::new(1, 2, 5.0),
                Rating::new(0, 0, 1.0),
                Rating::new(1, 0, 3.0),
            ],
            None,
        )
        .unwrap();
        let adj = BlockAdjacency::new(&data, 1.0);
        assert_eq!(adj.row(0), &[(0, 0.0)]);
        assert_eq!(adj.row(1), &[(2, 4.0), (0, 2.0)]);
        assert_eq!(adj.col(0), &[(0, 0.0), (1, 2.0)]);
        assert!(adj.col(1).is_empty());
        assert_eq!(adj.nnz(), 3);
    }

    #[test]
    fn factor_rows() {
        let f = FactorMatrix::from_rows(2, &[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(f.rows(), 2);
        assert_eq!(f.row(1), &[3.0, 4.0]);
        assert_eq!(dot(f.row(0), f.row(1)), 11.0);
    }
}
