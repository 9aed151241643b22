use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{DataFormat, GridSpec};

#[derive(Debug, Parser)]
#[command(
    name = "bmfpp",
    version,
    about = "Bayesian matrix factorization with posterior propagation over a block grid"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rewrite a ratings file as MatrixMarket or CSV triplets.
    Convert(ConvertArgs),
    /// Hold out a seeded fraction of ratings as a test file.
    Split(SplitArgs),
    /// Print shape statistics of a ratings file.
    Stats(StatsArgs),
    /// Train on a block grid; writes checkpoints, the run report and metrics.
    Train(RunArgs),
    /// Score a trained run on held-out ratings.
    Evaluate(EvaluateArgs),
    /// Train once per grid shape and tabulate wall-clock against RMSE.
    Sweep(SweepArgs),
    /// Time one grid at several worker counts.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PredictArg {
    Block,
    Aggregated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PartitionArg {
    Random,
    Contiguous,
}

/// Where the ratings come from.
#[derive(Clone, Debug, Default, Args)]
pub struct DataArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Ratings file (MatrixMarket coordinate or `row,col,value` CSV).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Input format; inferred from the extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<DataFormat>,
    /// CSV input has no header line.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Clone, Debug, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Output format; inferred from the output extension when absent.
    #[arg(long, value_enum)]
    pub to: Option<DataFormat>,
}

#[derive(Clone, Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving train and test files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of the written files.
    #[arg(long, value_enum, default_value = "csv")]
    pub to: DataFormat,
}

#[derive(Clone, Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Also write the statistics as JSON to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Everything that configures a training run.
#[derive(Clone, Debug, Default, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Held-out ratings; when absent a seeded split of `--data` is used.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Fraction of `--data` held out when no `--test` file is given.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Grid shape as `IxJ`.
    #[arg(long, conflicts_with = "target_blocks")]
    pub grid: Option<GridSpec>,
    /// Pick the most square grid with between N and 2N-1 blocks.
    #[arg(long)]
    pub target_blocks: Option<usize>,
    /// Row/column assignment to groups (default: random).
    #[arg(long, value_enum)]
    pub partition: Option<PartitionArg>,
    /// Latent dimension.
    #[arg(long)]
    pub k: Option<usize>,
    /// Residual noise precision.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Discarded sweeps per block.
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Retained sweeps per block.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Worker threads; falls back to the config file, then BMFPP_WORKERS,
    /// then the number of available cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Master seed for the split, the partition and every sampler stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Clip predictions into the observed rating range (`--clamp false` to
    /// override a config file).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub clamp: Option<bool>,
    /// Which posterior scores the test set (default: block).
    #[arg(long, value_enum)]
    pub predict: Option<PredictArg>,
}

#[derive(Clone, Debug, Args)]
pub struct EvaluateArgs {
    /// Output directory of a `train` run.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Ratings to score instead of the run's own held-out set.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Format of `--test`; inferred from the extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<DataFormat>,
    #[arg(long)]
    pub no_header: bool,
    /// Prediction path; defaults to the one used in training.
    #[arg(long, value_enum)]
    pub predict: Option<PredictArg>,
    /// Where to write the metric report; defaults to the checkpoint directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Grid shapes to try, e.g. `1x1,2x2,4x2`.
    #[arg(long, value_delimiter = ',')]
    pub grids: Vec<GridSpec>,
}

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Worker counts to time, e.g. `1,2,4,8`.
    #[arg(long, value_delimiter = ',')]
    pub worker_counts: Vec<usize>,
}
