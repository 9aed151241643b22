//! The `I × J` block partition of a ratings matrix.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Rating, SparseRatings};
use crate::samplers::{RngStream, StreamTag};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionStrategy {
    /// Seeded shuffle before cutting, to even out nonzeros per block.
    #[default]
    Random,
    /// Identity permutation.
    Contiguous,
}

/// One axis of the grid: a permutation cut into balanced, non-empty groups.
/// Members of each group are stored in ascending global order, so local
/// indices follow global order.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisPartition {
    perm: Vec<usize>,
    bounds: Vec<usize>,
    group_of: Vec<usize>,
    local_of: Vec<usize>,
}

impl AxisPartition {
    fn new(n: usize, groups: usize, strategy: PartitionStrategy, seed: u64, axis: u64) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        if strategy == PartitionStrategy::Random {
            let mut rng = RngStream::tagged(seed, StreamTag::GridPermutation, &[axis]);
            perm.shuffle(&mut rng);
        }
        let (base, extra) = (n / groups, n % groups);
        let mut bounds = Vec::with_capacity(groups + 1);
        bounds.push(0);
        for g in 0..groups {
            let size = base + usize::from(g < extra);
            bounds.push(bounds[g] + size);
        }
        for g in 0..groups {
            perm[bounds[g]..bounds[g + 1]].sort_unstable();
        }
        Self::from_parts(perm, bounds).expect("balanced cut is a valid partition")
    }

    fn from_parts(perm: Vec<usize>, bounds: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let bad = |m: &str| Error::InvalidData(format!("axis partition: {m}"));
        if bounds.len() < 2 || bounds[0] != 0 || *bounds.last().unwrap() != n {
            return Err(bad("bounds must start at 0 and end at the axis length"));
        }
        if bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("bounds must be strictly increasing"));
        }
        let mut group_of = vec![usize::MAX; n];
        let mut local_of = vec![0; n];
        for g in 0..bounds.len() - 1 {
            for (local, &global) in perm[bounds[g]..bounds[g + 1]].iter().enumerate() {
                if global >= n || group_of[global] != usize::MAX {
                    return Err(bad("permutation is not a bijection"));
                }
                group_of[global] = g;
                local_of[global] = local;
            }
        }
        Ok(AxisPartition {
            perm,
            bounds,
            group_of,
            local_of,
        })
    }

    pub fn groups(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Global indices in group `g`, ascending.
    pub fn members(&self, g: usize) -> &[usize] {
        &self.perm[self.bounds[g]..self.bounds[g + 1]]
    }

    pub fn group_len(&self, g: usize) -> usize {
        self.bounds[g + 1] - self.bounds[g]
    }

    /// `(group, local index)` of a global index.
    pub fn locate(&self, global: usize) -> (usize, usize) {
        (self.group_of[global], self.local_of[global])
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockGrid {
    rows: AxisPartition,
    cols: AxisPartition,
    strategy: PartitionStrategy,
    seed: u64,
}

pub fn build_grid(
    data: &SparseRatings,
    row_groups: usize,
    col_groups: usize,
    strategy: PartitionStrategy,
    seed: u64,
) -> Result<BlockGrid> {
    BlockGrid::new(
        data.n_rows(),
        data.n_cols(),
        row_groups,
        col_groups,
        strategy,
        seed,
    )
}

impl BlockGrid {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_groups: usize,
        col_groups: usize,
        strategy: PartitionStrategy,
        seed: u64,
    ) -> Result<Self> {
        if row_groups == 0 || row_groups > n_rows {
            return Err(Error::InvalidArgument(format!(
                "{row_groups} row groups for {n_rows} rows"
            )));
        }
        if col_groups == 0 || col_groups > n_cols {
            return Err(Error::InvalidArgument(format!(
                "{col_groups} column groups for {n_cols} columns"
            )));
        }
        Ok(BlockGrid {
            rows: AxisPartition::new(n_rows, row_groups, strategy, seed, 0),
            cols: AxisPartition::new(n_cols, col_groups, strategy, seed, 1),
            strategy,
            seed,
        })
    }

    pub fn row_groups(&self) -> usize {
        self.rows.groups()
    }

    pub fn col_groups(&self) -> usize {
        self.cols.groups()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.row_groups(), self.col_groups())
    }

    pub fn n_blocks(&self) -> usize {
        self.row_groups() * self.col_groups()
    }

    pub fn rows(&self) -> &AxisPartition {
        &self.rows
    }

    pub fn cols(&self) -> &AxisPartition {
        &self.cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn strategy(&self) -> PartitionStrategy {
        self.strategy
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Block coordinates and local indices of a global cell.
    pub fn locate(&self, row: usize, col: usize) -> ((usize, usize), (usize, usize)) {
        let (i, lr) = self.rows.locate(row);
        let (j, lc) = self.cols.locate(col);
        ((i, j), (lr, lc))
    }

    /// `(N/I) / (D/J)`: average block height over width.
    pub fn block_aspect(&self) -> f64 {
        block_aspect(
            self.n_rows(),
            self.n_cols(),
            self.row_groups(),
            self.col_groups(),
        )
    }

    pub fn to_file(&self) -> GridFile {
        GridFile {
            n_rows: self.n_rows(),
            n_cols: self.n_cols(),
            row_groups: self.row_groups(),
            col_groups: self.col_groups(),
            strategy: self.strategy,
            seed: self.seed,
            row_bounds: self.rows.bounds.clone(),
            col_bounds: self.cols.bounds.clone(),
            row_perm: self.rows.perm.clone(),
            col_perm: self.cols.perm.clone(),
        }
    }

    /// Rebuilds a grid from its file form, checking that the stored
    /// materialization is what its parameters regenerate.
    pub fn from_file(file: &GridFile) -> Result<Self> {
        let grid = BlockGrid::new(
            file.n_rows,
            file.n_cols,
            file.row_groups,
            file.col_groups,
            file.strategy,
            file.seed,
        )?;
        if grid.to_file() != *file {
            return Err(Error::InvalidData(
                "grid file boundaries do not match its parameters".into(),
            ));
        }
        Ok(grid)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_file())?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: GridFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_file(&file)
    }
}

pub fn block_aspect(n_rows: usize, n_cols: usize, row_groups: usize, col_groups: usize) -> f64 {
    (n_rows as f64 / row_groups as f64) / (n_cols as f64 / col_groups as f64)
}

/// Serialized grid: the parameters that regenerate it plus the materialized
/// permutations and boundaries for audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFile {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_groups: usize,
    pub col_groups: usize,
    pub strategy: PartitionStrategy,
    pub seed: u64,
    pub row_bounds: Vec<usize>,
    pub col_bounds: Vec<usize>,
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
}

/// Grid shape with `I·J ∈ [target, 2·target)` whose blocks are closest to
/// square, i.e. minimizing `|ln((N/I)/(D/J))|`. Ties go to the smaller `I·J`,
/// then the smaller `I`. Falls back to `(N, D)` when the matrix has fewer
/// than `target` cells.
pub fn suggest_grid(n_rows: usize, n_cols: usize, target_blocks: usize) -> (usize, usize) {
    let target = target_blocks.max(1);
    let mut best: Option<(f64, usize, usize, usize)> = None;
    for i in 1..=n_rows.min(2 * target - 1) {
        let j_lo = target.div_ceil(i).max(1);
        let j_hi = ((2 * target - 1) / i).min(n_cols);
        for j in j_lo..=j_hi {
            let score = block_aspect(n_rows, n_cols, i, j).ln().abs();
            let key = (score, i * j, i, j);
            let better = match best {
                None => true,
                Some(b) => (key.0, key.1, key.2) < (b.0, b.1, b.2),
            };
            if better {
                best = Some(key);
            }
        }
    }
    best.map_or((n_rows.max(1), n_cols.max(1)), |(_, _, i, j)| (i, j))
}

/// A block's ratings in local indices, with the maps back to global indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub i: usize,
    pub j: usize,
    pub ratings: SparseRatings,
    /// Local row index → global row index.
    pub rows: Vec<usize>,
    /// Local column index → global column index.
    pub cols: Vec<usize>,
}

pub fn extract_block(data: &SparseRatings, grid: &BlockGrid, i: usize, j: usize) -> Result<Block> {
    check_grid_matches(data, grid)?;
    if i >= grid.row_groups() || j >= grid.col_groups() {
        return Err(Error::InvalidArgument(format!(
            "block ({i}, {j}) outside a {}x{} grid",
            grid.row_groups(),
            grid.col_groups()
        )));
    }
    let entries = data
        .entries()
        .iter()
        .filter_map(|r| {
            let ((bi, bj), (lr, lc)) = grid.locate(r.row, r.col);
            (bi == i && bj == j).then_some(Rating::new(lr, lc, r.value))
        })
        .collect();
    Ok(make_block(data, grid, i, j, entries))
}

/// All blocks in row-major order, in one pass over the entries.
pub fn partition_blocks(data: &SparseRatings, grid: &BlockGrid) -> Result<Vec<Block>> {
    check_grid_matches(data, grid)?;
    let jn = grid.col_groups();
    let mut buckets: Vec<Vec<Rating>> = vec![Vec::new(); grid.n_blocks()];
    for r in data.entries() {
        let ((bi, bj), (lr, lc)) = grid.locate(r.row, r.col);
        buckets[bi * jn + bj].push(Rating::new(lr, lc, r.value));
    }
    Ok(buckets
        .into_iter()
        .enumerate()
        .map(|(b, entries)| make_block(data, grid, b / jn, b % jn, entries))
        .collect())
}

fn make_block(
    data: &SparseRatings,
    grid: &BlockGrid,
    i: usize,
    j: usize,
    entries: Vec<Rating>,
) -> Block {
    let rows = grid.rows.members(i).to_vec();
    let cols = grid.cols.members(j).to_vec();
    Block {
        i,
        j,
        ratings: SparseRatings::from_parts_unchecked(rows.len(), cols.len(), entries, data.scale()),
        rows,
        cols,
    }
}

fn check_grid_matches(data: &SparseRatings, grid: &BlockGrid) -> Result<()> {
    if (data.n_rows(), data.n_cols()) != (grid.n_rows(), grid.n_cols()) {
        return Err(Error::InvalidArgument(format!(
            "grid built for {}x{}, data is {}x{}",
            grid.n_rows(),
            grid.n_cols(),
            data.n_rows(),
            data.n_cols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(n: usize, d: usize) -> SparseRatings {
        let entries = (0..n)
            .flat_map(|r| (0..d).map(move |c| Rating::new(r, c, (r * d + c) as f64)))
            .collect();
        SparseRatings::new(n, d, entries, None).unwrap()
    }

    #[test]
    fn one_cell_blocks() {
        let data = dense(3, 4);
        let grid = build_grid(&data, 3, 4, PartitionStrategy::Random, 3).unwrap();
        for block in partition_blocks(&data, &grid).unwrap() {
            assert_eq!((block.ratings.n_rows(), block.ratings.n_cols()), (1, 1));
            assert_eq!(block.ratings.len(), 1);
        }
    }

    #[test]
    fn degenerate_grid_is_identity() {
        let data = dense(3, 4);
        let grid = build_grid(&data, 1, 1, PartitionStrategy::Random, 17).unwrap();
        let block = extract_block(&data, &grid, 0, 0).unwrap();
        assert_eq!(block.ratings, data);
        assert_eq!(block.rows, vec![0, 1, 2]);
        assert_eq!(block.cols, vec![0, 1, 2, 3]);
    }

    #[test]
    fn contiguous_balanced_cut() {
        let grid = BlockGrid::new(10, 2, 3, 1, PartitionStrategy::Contiguous, 0).unwrap();
        let sizes: Vec<_> = (0..3).map(|g| grid.rows().group_len(g)).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        assert_eq!(grid.rows().members(0), &[0, 1, 2, 3]);
        assert_eq!(grid.rows().bounds(), &[0, 4, 7, 10]);
    }

    #[test]
    fn too_many_groups() {
        assert!(BlockGrid::new(3, 4, 4, 1, PartitionStrategy::Random, 0).is_err());
        assert!(BlockGrid::new(3, 4, 1, 5, PartitionStrategy::Random, 0).is_err());
        assert!(BlockGrid::new(3, 4, 0, 1, PartitionStrategy::Random, 0).is_err());
    }

    #[test]
    fn empty_block_keeps_local_dimensions() {
        let data = SparseRatings::new(4, 4, vec![Rating::new(0, 0, 1.0)], None).unwrap();
        let grid = build_grid(&data, 2, 2, PartitionStrategy::Contiguous, 0).unwrap();
        let block = extract_block(&data, &grid, 1, 1).unwrap();
        assert!(block.ratings.is_empty());
        assert_eq!((block.ratings.n_rows(), block.ratings.n_cols()), (2, 2));
        assert!(extract_block(&data, &grid, 2, 0).is_err());
    }

    #[test]
    fn suggest_square_matrix() {
        assert_eq!(suggest_grid(100, 100, 4), (2, 2));
        assert_eq!(suggest_grid(5, 5, 1), (1, 1));
    }

    /// Independent enumeration over every integer pair.
    fn brute_force_suggest(n: usize, d: usize, target: usize) -> (usize, usize) {
        let mut best = None;
        for i in 1..=n {
            for j in 1..=d {
                if i * j < target || i * j >= 2 * target {
                    continue;
                }
                let score = ((n as f64 / i as f64) / (d as f64 / j as f64)).ln().abs();
                let key = (score, i * j, i);
                match best {
                    Some((k, _)) if k <= key => {}
                    _ => best = Some((key, (i, j))),
                }
            }
        }
        best.unwrap().1
    }

    #[test]
    fn suggest_netflix_shape() {
        // Frozen from exhaustive enumeration (Python and brute_force_suggest):
        // (54, 2) gives aspect 0.9992.
        assert_eq!(suggest_grid(480_200, 17_800, 60), (54, 2));
    }

    #[test]
    fn suggest_matches_brute_force() {
        for &(n, d) in &[(200, 160), (37, 5), (5, 37), (64, 64), (1000, 3)] {
            for target in 1..40 {
                assert_eq!(
                    suggest_grid(n, d, target),
                    brute_force_suggest(n, d, target),
                    "{n}x{d} target {target}"
                );
            }
        }
    }

    #[test]
    fn grid_file_roundtrip() {
        let grid = BlockGrid::new(13, 7, 3, 2, PartitionStrategy::Random, 99).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.json");
        grid.save(&path).unwrap();
        assert_eq!(BlockGrid::load(&path).unwrap(), grid);
        let mut tampered = grid.to_file();
        tampered.row_bounds[1] += 1;
        assert!(BlockGrid::from_file(&tampered).is_err());
    }

    proptest! {
        #[test]
        fn blocks_partition_entries(
            n in 1usize..20,
            d in 1usize..20,
            seed in 0u64..1000,
            gi in 1usize..6,
            gj in 1usize..6,
            keep in prop::collection::vec(any::<bool>(), 400),
        ) {
            let (gi, gj) = (gi.min(n), gj.min(d));
            let entries: Vec<_> = (0..n * d)
                .filter(|&k| keep[k])
                .map(|k| Rating::new(k / d, k % d, k as f64))
                .collect();
            let data = SparseRatings::new(n, d, entries, None).unwrap();
            let grid = build_grid(&data, gi, gj, PartitionStrategy::Random, seed).unwrap();
            for axis in [grid.rows(), grid.cols()] {
                let sizes: Vec<_> = (0..axis.groups()).map(|g| axis.group_len(g)).collect();
                prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
                prop_assert!(sizes.iter().all(|&s| s > 0));
                let mut all = axis.perm().to_vec();
                all.sort_unstable();
                prop_assert_eq!(all, (0..axis.len()).collect::<Vec<_>>());
            }
            let blocks = partition_blocks(&data, &grid).unwrap();
            let total: usize = blocks.iter().map(|b| b.ratings.len()).sum();
            prop_assert_eq!(total, data.len());
            let mut global: Vec<(usize, usize)> = blocks
                .iter()
                .flat_map(|b| b.ratings.entries().iter().map(move |r| (b.rows[r.row], b.cols[r.col])))
                .collect();
            global.sort_unstable();
            let mut expected: Vec<_> = data.entries().iter().map(Rating::cell).collect();
            expected.sort_unstable();
            prop_assert_eq!(global, expected);
            for b in &blocks {
                prop_assert_eq!(&extract_block(&data, &grid, b.i, b.j).unwrap(), b);
                for (local, &g) in b.rows.iter().enumerate() {
                    prop_assert_eq!(grid.rows().locate(g), (b.i, local));
                }
            }
            let again = build_grid(&data, gi, gj, PartitionStrategy::Random, seed).unwrap();
            prop_assert_eq!(again, grid);
        }
    }
}
