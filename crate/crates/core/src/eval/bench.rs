use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{block_aspect, build_grid, BlockGrid, PartitionStrategy, SparseRatings};
use crate::gibbs::ModelConfig;
use crate::scheduler::{execute_plan, plan_phases, RunOptions, RunReport};
use crate::{Error, Result};

pub const SWEEP_CSV_HEADER: &str = "I,J,seconds,rmse,aspect";
pub const SCALING_CSV_HEADER: &str = "workers,seconds,speedup,pareto";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub row_groups: usize,
    pub col_groups: usize,
    pub seconds: f64,
    pub rmse: f64,
    /// `(N/I) / (D/J)`.
    pub aspect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub row_groups: usize,
    pub col_groups: usize,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub failures: Vec<SweepFailure>,
}

impl SweepOutcome {
    /// Point with the lowest RMSE.
    pub fn best(&self) -> Option<&SweepPoint> {
        self.points.iter().min_by(|a, b| a.rmse.total_cmp(&b.rmse))
    }

    /// Point whose blocks are closest to square.
    pub fn most_square(&self) -> Option<&SweepPoint> {
        self.points
            .iter()
            .min_by(|a, b| a.aspect.ln().abs().total_cmp(&b.aspect.ln().abs()))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SWEEP_CSV_HEADER.split(','))?;
        for p in &self.points {
            w.write_record([
                p.row_groups.to_string(),
                p.col_groups.to_string(),
                p.seconds.to_string(),
                p.rmse.to_string(),
                p.aspect.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One full train and evaluate cycle per grid, all with `options.seed`. A
/// failing grid is recorded and the sweep moves on.
pub fn run_grid_sweep(
    train: &SparseRatings,
    test: &SparseRatings,
    grids: &[(usize, usize)],
    strategy: PartitionStrategy,
    config: &ModelConfig,
    options: &RunOptions,
) -> Result<SweepOutcome> {
    if grids.is_empty() {
        return Err(Error::InvalidArgument(
            "grid sweep needs at least one grid".into(),
        ));
    }
    if test.is_empty() {
        return Err(Error::InvalidArgument("grid sweep needs test cells".into()));
    }
    let options = RunOptions {
        checkpoint_dir: None,
        ..options.clone()
    };
    let mut outcome = SweepOutcome::default();
    for &(i, j) in grids {
        let attempt = || -> Result<SweepPoint> {
            let grid = build_grid(train, i, j, strategy, options.seed)?;
            let run = execute_plan(&plan_phases(&grid), train, &grid, test, config, &options)?;
            let m = &run.report.metrics;
            let rmse = match options.predict {
                crate::scheduler::PredictMode::Block => m.rmse_block,
                crate::scheduler::PredictMode::Aggregated => m.rmse_aggregated,
            };
            Ok(SweepPoint {
                row_groups: i,
                col_groups: j,
                seconds: run.report.total_seconds,
                rmse: rmse.expect("test set is non-empty"),
                aspect: block_aspect(train.n_rows(), train.n_cols(), i, j),
            })
        };
        match attempt() {
            Ok(p) => outcome.points.push(p),
            Err(e) => outcome.failures.push(SweepFailure {
                row_groups: i,
                col_groups: j,
                error: e.to_string(),
            }),
        }
    }
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub workers: usize,
    pub seconds: f64,
    /// Time of the first worker count over this one.
    pub speedup: f64,
    /// No other point has both no more workers and a shorter time.
    pub pareto: bool,
    pub rows_per_sec: f64,
    pub ratings_per_sec: f64,
    pub rmse: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingOutcome {
    pub points: Vec<ScalingPoint>,
    pub reports: Vec<RunReport>,
}

impl ScalingOutcome {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SCALING_CSV_HEADER.split(','))?;
        for p in &self.points {
            w.write_record([
                p.workers.to_string(),
                p.seconds.to_string(),
                p.speedup.to_string(),
                p.pareto.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the same plan and seed once per worker count.
pub fn run_scaling_bench(
    train: &SparseRatings,
    test: &SparseRatings,
    grid: &BlockGrid,
    worker_counts: &[usize],
    config: &ModelConfig,
    options: &RunOptions,
) -> Result<ScalingOutcome> {
    if worker_counts.is_empty() {
        return Err(Error::InvalidArgument(
            "scaling bench needs at least one worker count".into(),
        ));
    }
    let plan = plan_phases(grid);
    let mut reports = Vec::with_capacity(worker_counts.len());
    for &workers in worker_counts {
        let opts = RunOptions {
            workers,
            checkpoint_dir: None,
            ..options.clone()
        };
        reports.push(execute_plan(&plan, train, grid, test, config, &opts)?.report);
    }
    let seconds: Vec<f64> = reports.iter().map(|r| r.total_seconds).collect();
    let pareto = pareto_front(worker_counts, &seconds);
    let points = reports
        .iter()
        .zip(pareto)
        .map(|(r, pareto)| ScalingPoint {
            workers: r.workers,
            seconds: r.total_seconds,
            speedup: seconds[0] / r.total_seconds,
            pareto,
            rows_per_sec: r.rows_per_sec,
            ratings_per_sec: r.ratings_per_sec,
            rmse: r.metrics.rmse_block,
        })
        .collect();
    Ok(ScalingOutcome { points, reports })
}

/// Flags points that no other point beats with both `≤` workers and `<` time.
pub fn pareto_front(workers: &[usize], seconds: &[f64]) -> Vec<bool> {
    (0..workers.len())
        .map(|p| {
            !(0..workers.len())
                .any(|q| q != p && workers[q] <= workers[p] && seconds[q] < seconds[p])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pareto_flags() {
        assert_eq!(pareto_front(&[1], &[3.0]), vec![true]);
        assert_eq!(
            pareto_front(&[1, 2, 4, 8], &[4.0, 2.0, 2.5, 1.0]),
            vec![true, true, false, true]
        );
        assert_eq!(pareto_front(&[1, 2], &[1.0, 1.0]), vec![true, true]);
    }

    #[test]
    fn csv_headers_are_fixed() {
        let mut buf = Vec::new();
        SweepOutcome::default().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "I,J,seconds,rmse,aspect\n");
        let mut buf = Vec::new();
        ScalingOutcome {
            points: vec![],
            reports: vec![],
        }
        .write_csv(&mut buf)
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "workers,seconds,speedup,pareto\n"
        );
    }
}
