//! Three-phase execution of block chains over a grid.
//!
//! Phase (a) runs block `(0, 0)` alone. Phase (b) runs the rest of row group
//! 0 and column group 0, each taking one side's prior from `(0, 0)`. Phase (c)
//! runs every remaining block `(i, j)` with priors from `(i, 0)` and `(0, j)`.

mod aggregate;
mod checkpoint;
mod execute;
mod plan;
mod report;

pub use aggregate::{aggregate_posteriors, AggregatedPosterior, BlockSummaries};
pub use checkpoint::{block_path, write_atomic, BlockCheckpoint};
pub use execute::{execute_plan, BlockOutput, PlanOutput, PredictMode, RunOptions};
pub use plan::{
    allocate_workers, max_phase_parallelism, plan_phases, sample_accounting, BlockId, Phase,
    PhaseParallelism, PhasePlan, PriorSources, SampleAccounting,
};
pub use report::{BlockReport, PhaseReport, RunMetrics, RunReport, BLOCK_CSV_HEADER};
