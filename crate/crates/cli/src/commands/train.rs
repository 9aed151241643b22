//! `train` and `evaluate`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use bmfpp::data::{build_grid, BlockGrid, RatingScale, SparseRatings};
use bmfpp::eval::{rmse_by_block, BlockMetric, MetricReport};
use bmfpp::gibbs::ChainOutput;
use bmfpp::posterior::{predict_cells, predict_from_summaries, GaussianRowSummary};
use bmfpp::scheduler::{
    aggregate_posteriors, execute_plan, plan_phases, BlockCheckpoint, BlockId, BlockSummaries,
    PredictMode, RunOptions, RunReport,
};
use serde::{Deserialize, Serialize};

use crate::artifacts::{read_json, write_bytes, write_json, Stamped};
use crate::cli::{EvaluateArgs, PredictArg, RunArgs};
use crate::config::{load_ratings, DataFormat, GridSpec, Resolved, RunConfig};
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const METRICS: &str = "metrics.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "blocks.csv";
pub const EVALUATION: &str = "evaluation.json";
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const GRID_FILE: &str = "grid.json";

/// Describes a finished training run; written last, so its presence marks
/// the output directory complete.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainManifest {
    pub version: String,
    pub config: RunConfig,
    pub grid: GridSpec,
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Training mean, subtracted before sampling.
    pub rating_offset: f64,
    /// Observed training range, used for clamping.
    pub scale: RatingScale,
    pub checkpoint: PathBuf,
    pub artifacts: Vec<PathBuf>,
}

/// Test-set accuracy, free of timings so that reruns are byte-identical.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsFile {
    pub grid: GridSpec,
    pub predict: PredictMode,
    pub n_test: usize,
    /// RMSE of the configured prediction path.
    pub rmse: f64,
    pub rmse_block: Option<f64>,
    pub rmse_aggregated: Option<f64>,
    pub per_block: Vec<BlockMetric>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub checkpoint: PathBuf,
    pub grid: GridSpec,
    pub predict: PredictMode,
    pub n_test: usize,
    pub rmse: f64,
    /// Cells scored from row summaries because training never sampled them.
    pub summary_predictions: usize,
    pub per_block: Vec<BlockMetric>,
}

fn score(
    test: &SparseRatings,
    means: impl IntoIterator<Item = f64>,
    grid: &BlockGrid,
) -> Result<MetricReport, CliError> {
    let cells: Vec<_> = test
        .entries()
        .iter()
        .zip(means)
        .map(|(r, m)| (r.row, r.col, m))
        .collect();
    Ok(rmse_by_block(&cells, test, grid)?)
}

pub fn train(args: &RunArgs) -> Result<(), CliError> {
    let resolved = Resolved::from_args(args)?;
    let run = &resolved.run;
    let hash = run.hash();
    let config = run.model.to_model_config()?;
    let (train, test) = run.data.load_split(run.seed)?;
    if test.is_empty() {
        return Err(CliError::data("the test set is empty"));
    }
    let shape = run.grid.resolve(train.n_rows(), train.n_cols());
    let grid = build_grid(
        &train,
        shape.row_groups,
        shape.col_groups,
        run.partition,
        run.seed,
    )?;

    let out = &resolved.out;
    let checkpoint = out.join(CHECKPOINT_DIR);
    write_json(&checkpoint.join(GRID_FILE), &grid.to_file())?;
    let options = RunOptions {
        workers: resolved.workers,
        seed: run.seed,
        clamp: run.clamp,
        predict: run.predict,
        checkpoint_dir: Some(checkpoint),
    };
    let output = execute_plan(&plan_phases(&grid), &train, &grid, &test, &config, &options)?;
    let preds = output
        .predictions(run.predict)
        .expect("the configured prediction path is always produced");
    let report = score(&test, preds.iter().map(|p| p.mean), &grid)?;
    let metrics = MetricsFile {
        grid: shape,
        predict: run.predict,
        n_test: test.len(),
        rmse: report.rmse,
        rmse_block: output.report.metrics.rmse_block,
        rmse_aggregated: output.report.metrics.rmse_aggregated,
        per_block: report.per_block,
    };
    let seed = Some(run.seed);
    write_json(&out.join(METRICS), &Stamped::new(&hash, seed, &metrics))?;
    write_json(
        &out.join(REPORT_JSON),
        &Stamped::new(
            &hash,
            seed,
            ReportFile {
                report: &output.report,
            },
        ),
    )?;
    let csv = output.report.to_csv()?;
    write_bytes(&out.join(REPORT_CSV), csv.as_bytes())?;
    let manifest = TrainManifest {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        config: run.clone(),
        grid: shape,
        n_rows: train.n_rows(),
        n_cols: train.n_cols(),
        n_train: train.len(),
        n_test: test.len(),
        rating_offset: output.offset,
        scale: train.scale(),
        checkpoint: CHECKPOINT_DIR.into(),
        artifacts: [METRICS, REPORT_JSON, REPORT_CSV]
            .iter()
            .map(PathBuf::from)
            .collect(),
    };
    write_json(&out.join(MANIFEST), &Stamped::new(&hash, seed, &manifest))?;

    let resumed = output.report.blocks.iter().filter(|b| b.resumed).count();
    println!(
        "grid {shape}: {} blocks ({resumed} resumed), {:.2}s, {:.0} rows/s",
        output.report.blocks.len(),
        output.report.total_seconds,
        output.report.rows_per_sec
    );
    println!("rmse {}", metrics.rmse);
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct ReportFile<'a> {
    report: &'a RunReport,
}

/// Block results read back from a checkpoint directory.
struct LoadedBlocks {
    col_groups: usize,
    blocks: Vec<LoadedBlock>,
}

struct LoadedBlock {
    chain: ChainOutput,
    /// Local query cell → index into `chain.predictions`.
    query: HashMap<(usize, usize), usize>,
}

impl LoadedBlocks {
    fn load(dir: &Path, grid: &BlockGrid) -> Result<Self, CliError> {
        let (ni, nj) = grid.shape();
        let mut blocks = Vec::with_capacity(ni * nj);
        for i in 0..ni {
            for j in 0..nj {
                let id = BlockId::new(i, j);
                let cp = BlockCheckpoint::load(dir, id)?.ok_or_else(|| {
                    CliError::data(format!("{} has no result for block {id}", dir.display()))
                })?;
                let expected = (grid.rows().group_len(i), grid.cols().group_len(j));
                if (cp.rows, cp.cols) != expected {
                    return Err(CliError::data(format!(
                        "block {id} is {}x{} in the checkpoint but {}x{} in the grid",
                        cp.rows, cp.cols, expected.0, expected.1
                    )));
                }
                let query = cp.query.iter().enumerate().map(|(k, &c)| (c, k)).collect();
                blocks.push(LoadedBlock {
                    chain: cp.to_chain_output()?,
                    query,
                });
            }
        }
        Ok(LoadedBlocks {
            col_groups: nj,
            blocks,
        })
    }

    fn get(&self, id: BlockId) -> &LoadedBlock {
        &self.blocks[id.i * self.col_groups + id.j]
    }
}

impl BlockSummaries for LoadedBlocks {
    fn u(&self, block: BlockId) -> &[GaussianRowSummary] {
        &self.get(block).chain.u
    }

    fn v(&self, block: BlockId) -> &[GaussianRowSummary] {
        &self.get(block).chain.v
    }
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let stamped: Stamped<TrainManifest> = read_json(&args.checkpoint.join(MANIFEST))?;
    let manifest = &stamped.body;
    let run = &manifest.config;
    let config = run.model.to_model_config()?;
    let dims = (manifest.n_rows, manifest.n_cols);
    let test = match &args.test {
        Some(path) => {
            let format = args.format.unwrap_or_else(|| DataFormat::infer(path));
            load_ratings(path, format, !args.no_header, Some(dims))?
        }
        None => {
            let (train, test) = run.data.load_split(run.seed)?;
            if (train.n_rows(), train.n_cols()) != dims {
                return Err(CliError::data(format!(
                    "{} is now {}x{}, the run was trained on {}x{}",
                    run.data.path.display(),
                    train.n_rows(),
                    train.n_cols(),
                    dims.0,
                    dims.1
                )));
            }
            test
        }
    };
    if test.is_empty() {
        return Err(CliError::data("no ratings to evaluate"));
    }

    let checkpoint = args.checkpoint.join(&manifest.checkpoint);
    let grid = BlockGrid::load(checkpoint.join(GRID_FILE))?;
    if grid.shape() != manifest.grid.shape() || (grid.n_rows(), grid.n_cols()) != dims {
        return Err(CliError::data(format!(
            "grid file does not match the manifest ({} on {}x{})",
            manifest.grid, dims.0, dims.1
        )));
    }
    let blocks = LoadedBlocks::load(&checkpoint, &grid)?;
    let predict = match args.predict {
        Some(PredictArg::Block) => PredictMode::Block,
        Some(PredictArg::Aggregated) => PredictMode::Aggregated,
        None => run.predict,
    };
    let (offset, tau, scale) = (manifest.rating_offset, config.tau, manifest.scale);
    let clamp = |x: f64| if run.clamp { scale.clamp(x) } else { x };

    let mut from_summaries = 0;
    let means: Vec<f64> = match predict {
        PredictMode::Block => test
            .entries()
            .iter()
            .map(|r| -> Result<f64, CliError> {
                let ((i, j), (lr, lc)) = grid.locate(r.row, r.col);
                let block = blocks.get(BlockId::new(i, j));
                match block.query.get(&(lr, lc)) {
                    Some(&q) => {
                        let acc = block.chain.predictions[q];
                        Ok(predict_cells(&[acc], tau, scale, run.clamp)?[0].mean)
                    }
                    None => {
                        from_summaries += 1;
                        let (u, v) = (&block.chain.u[lr], &block.chain.v[lc]);
                        Ok(clamp(predict_from_summaries(u, v, offset, tau).mean))
                    }
                }
            })
            .collect::<Result<_, _>>()?,
        PredictMode::Aggregated => {
            let agg = aggregate_posteriors(&grid, &blocks, config.jitter)?;
            test.entries()
                .iter()
                .map(|r| clamp(agg.predict(r.row, r.col, offset, tau).mean))
                .collect()
        }
    };
    let report = score(&test, means, &grid)?;
    let evaluation = EvaluationFile {
        checkpoint: args.checkpoint.clone(),
        grid: manifest.grid,
        predict,
        n_test: test.len(),
        rmse: report.rmse,
        summary_predictions: from_summaries,
        per_block: report.per_block,
    };
    let out = args.out.as_ref().unwrap_or(&args.checkpoint);
    write_json(
        &out.join(EVALUATION),
        &Stamped::new(&stamped.config_hash, stamped.seed, &evaluation),
    )?;
    println!("rmse {}", evaluation.rmse);
    Ok(())
}
