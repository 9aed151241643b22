//! Test-set metrics, synthetic data, grid sweeps and scaling runs.

mod bench;
mod metrics;
mod synthetic;

pub use bench::{
    pareto_front, run_grid_sweep, run_scaling_bench, ScalingOutcome, ScalingPoint, SweepFailure,
    SweepOutcome, SweepPoint, SCALING_CSV_HEADER, SWEEP_CSV_HEADER,
};
pub use metrics::{global_mean_rmse, rmse, rmse_by_block, BlockMetric, MetricReport};
pub use synthetic::{generate_synthetic, SyntheticData};
