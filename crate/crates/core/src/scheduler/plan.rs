use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::BlockGrid;
use crate::gibbs::ModelConfig;

/// Grid coordinates `(i, j)`: row group `i`, column group `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockId {
    pub i: usize,
    pub j: usize,
}

impl BlockId {
    pub const ORIGIN: BlockId = BlockId { i: 0, j: 0 };

    pub fn new(i: usize, j: usize) -> Self {
        BlockId { i, j }
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn label(self) -> &'static str {
        match self {
            Phase::A => "a",
            Phase::B => "b",
            Phase::C => "c",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Where each side of a block gets its prior. `None` means hierarchical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorSources {
    pub u: Option<BlockId>,
    pub v: Option<BlockId>,
}

impl PriorSources {
    pub fn dependencies(&self) -> impl Iterator<Item = BlockId> {
        self.u.into_iter().chain(self.v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhasePlan {
    row_groups: usize,
    col_groups: usize,
    phase_b: Vec<BlockId>,
    phase_c: Vec<BlockId>,
}

impl PhasePlan {
    pub fn shape(&self) -> (usize, usize) {
        (self.row_groups, self.col_groups)
    }

    pub fn phase_a(&self) -> BlockId {
        BlockId::ORIGIN
    }

    /// Row blocks `(i, 0)` first, then column blocks `(0, j)`.
    pub fn phase_b(&self) -> &[BlockId] {
        &self.phase_b
    }

    /// Row-major.
    pub fn phase_c(&self) -> &[BlockId] {
        &self.phase_c
    }

    pub fn blocks(&self, phase: Phase) -> &[BlockId] {
        match phase {
            Phase::A => std::slice::from_ref(&BlockId::ORIGIN),
            Phase::B => &self.phase_b,
            Phase::C => &self.phase_c,
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.row_groups * self.col_groups
    }

    pub fn phase_of(&self, block: BlockId) -> Phase {
        match (block.i, block.j) {
            (0, 0) => Phase::A,
            (0, _) | (_, 0) => Phase::B,
            _ => Phase::C,
        }
    }

    pub fn sources(&self, block: BlockId) -> PriorSources {
        match (block.i, block.j) {
            (0, 0) => PriorSources { u: None, v: None },
            (_, 0) => PriorSources {
                u: None,
                v: Some(BlockId::ORIGIN),
            },
            (0, _) => PriorSources {
                u: Some(BlockId::ORIGIN),
                v: None,
            },
            (i, j) => PriorSources {
                u: Some(BlockId::new(i, 0)),
                v: Some(BlockId::new(0, j)),
            },
        }
    }
}

pub fn plan_phases(grid: &BlockGrid) -> PhasePlan {
    plan_for_shape(grid.row_groups(), grid.col_groups())
}

pub(crate) fn plan_for_shape(row_groups: usize, col_groups: usize) -> PhasePlan {
    let phase_b = (1..row_groups)
        .map(|i| BlockId::new(i, 0))
        .chain((1..col_groups).map(|j| BlockId::new(0, j)))
        .collect();
    let phase_c = (1..row_groups)
        .flat_map(|i| (1..col_groups).map(move |j| BlockId::new(i, j)))
        .collect();
    PhasePlan {
        row_groups,
        col_groups,
        phase_b,
        phase_c,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleAccounting {
    pub sweeps: u64,
    pub row_updates: u64,
}

/// Every block runs the full `burn_in + samples` sweeps, so the totals grow
/// with the number of blocks.
pub fn sample_accounting(grid: &BlockGrid, config: &ModelConfig) -> SampleAccounting {
    let (i, j) = grid.shape();
    let per_block = config.total_sweeps() as u64;
    SampleAccounting {
        sweeps: (i * j) as u64 * per_block,
        row_updates: per_block * (j * grid.n_rows() + i * grid.n_cols()) as u64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseParallelism {
    /// Independent blocks in phase (b): `(I−1) + (J−1)`.
    pub phase_b: usize,
    /// Independent blocks in phase (c): `(I−1)·(J−1)`.
    pub phase_c: usize,
    /// The looser `I + J` figure.
    pub loose_bound_b: usize,
    /// The looser `I · J` figure.
    pub loose_bound_c: usize,
}

pub fn max_phase_parallelism(grid: &BlockGrid) -> PhaseParallelism {
    parallelism_for_shape(grid.row_groups(), grid.col_groups())
}

pub(crate) fn parallelism_for_shape(i: usize, j: usize) -> PhaseParallelism {
    PhaseParallelism {
        phase_b: (i - 1) + (j - 1),
        phase_c: (i - 1) * (j - 1),
        loose_bound_b: i + j,
        loose_bound_c: i * j,
    }
}

/// Splits `workers` over blocks of the given sizes (rows + cols): one each
/// while they last, then the remainder in proportion to size by largest
/// remainder. Ties go to the earlier block.
pub fn allocate_workers(sizes: &[usize], workers: usize) -> Vec<usize> {
    let n = sizes.len();
    if n == 0 {
        return Vec::new();
    }
    let mut alloc = vec![1usize; n];
    if workers <= n {
        return alloc;
    }
    let spare = workers - n;
    let total: usize = sizes.iter().sum();
    if total == 0 {
        for b in 0..spare {
            alloc[b % n] += 1;
        }
        return alloc;
    }
    let mut given = 0;
    let mut remainders = Vec::with_capacity(n);
    for (b, &s) in sizes.iter().enumerate() {
        let share = spare * s;
        alloc[b] += share / total;
        given += share / total;
        remainders.push((share % total, b));
    }
    remainders.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
    for &(_, b) in remainders.iter().take(spare - given) {
        alloc[b] += 1;
    }
    alloc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PartitionStrategy;
    use proptest::prelude::*;

    fn grid(n: usize, d: usize, i: usize, j: usize) -> BlockGrid {
        BlockGrid::new(n, d, i, j, PartitionStrategy::Contiguous, 0).unwrap()
    }

    #[test]
    fn three_by_four_layout() {
        let plan = plan_phases(&grid(12, 12, 3, 4));
        assert_eq!(plan.phase_b().len(), 5);
        assert_eq!(plan.phase_c().len(), 6);
        for i in 0..3 {
            for j in 0..4 {
                let b = BlockId::new(i, j);
                let expected = match (i, j) {
                    (0, 0) => Phase::A,
                    (0, _) | (_, 0) => Phase::B,
                    _ => Phase::C,
                };
                assert_eq!(plan.phase_of(b), expected);
                assert!(plan.blocks(expected).contains(&b));
            }
        }
        assert_eq!(
            plan.sources(BlockId::new(2, 3)),
            PriorSources {
                u: Some(BlockId::new(2, 0)),
                v: Some(BlockId::new(0, 3))
            }
        );
        assert_eq!(plan.sources(BlockId::new(2, 0)).v, Some(BlockId::ORIGIN));
        assert_eq!(plan.sources(BlockId::new(2, 0)).u, None);
        assert_eq!(plan.sources(BlockId::new(0, 1)).u, Some(BlockId::ORIGIN));
    }

    #[test]
    fn degenerate_shapes() {
        let plan = plan_phases(&grid(5, 5, 1, 1));
        assert!(plan.phase_b().is_empty() && plan.phase_c().is_empty());
        let plan = plan_phases(&grid(5, 5, 2, 1));
        assert_eq!(plan.phase_b(), &[BlockId::new(1, 0)]);
        assert!(plan.phase_c().is_empty());
    }

    #[test]
    fn accounting() {
        let config = ModelConfig::new(2).with_sweeps(40, 60);
        let acc = sample_accounting(&grid(10, 12, 2, 3), &config);
        assert_eq!(acc.row_updates, 5400);
        assert_eq!(acc.sweeps, 600);
        let one = sample_accounting(&grid(64, 64, 1, 1), &config);
        let many = sample_accounting(&grid(64, 64, 32, 32), &config);
        assert_eq!(many.sweeps, 1024 * one.sweeps);
        assert_eq!(one.row_updates, 100 * 128);
    }

    #[test]
    fn parallelism() {
        let p = parallelism_for_shape(3, 4);
        assert_eq!((p.phase_b, p.phase_c), (5, 6));
        assert_eq!((p.loose_bound_b, p.loose_bound_c), (7, 12));
        let p = parallelism_for_shape(1, 1);
        assert_eq!((p.phase_b, p.phase_c), (0, 0));
        let p = parallelism_for_shape(32, 32);
        assert_eq!((p.phase_b, p.phase_c), (62, 961));
    }

    #[test]
    fn worker_allocation() {
        assert_eq!(allocate_workers(&[10, 10, 10], 2), vec![1, 1, 1]);
        assert_eq!(allocate_workers(&[10, 30], 6), vec![2, 4]);
        assert_eq!(allocate_workers(&[5], 8), vec![8]);
        assert_eq!(allocate_workers(&[1, 1, 1], 5), vec![2, 2, 1]);
        assert!(allocate_workers(&[], 4).is_empty());
    }

    proptest! {
        #[test]
        fn phases_partition_the_grid(i in 1usize..9, j in 1usize..9) {
            let plan = plan_for_shape(i, j);
            let mut all: Vec<BlockId> = Phase::ALL
                .iter()
                .flat_map(|&p| plan.blocks(p).to_vec())
                .collect();
            prop_assert_eq!(all.len(), i * j);
            all.sort();
            all.dedup();
            prop_assert_eq!(all.len(), i * j);
            for &b in plan.phase_b().iter().chain(plan.phase_c()) {
                for dep in plan.sources(b).dependencies() {
                    prop_assert!(plan.phase_of(dep) < plan.phase_of(b));
                }
            }
        }

        #[test]
        fn allocation_uses_every_worker(
            sizes in proptest::collection::vec(0usize..50, 1..10),
            workers in 1usize..40,
        ) {
            let alloc = allocate_workers(&sizes, workers);
            prop_assert!(alloc.iter().all(|&w| w >= 1));
            prop_assert_eq!(alloc.iter().sum::<usize>(), workers.max(sizes.len()));
        }
    }
}
