//! `sweep` and `bench`.

use bmfpp::data::build_grid;
use bmfpp::eval::{run_grid_sweep, run_scaling_bench, ScalingPoint, SweepFailure, SweepPoint};
use bmfpp::scheduler::{RunOptions, RunReport};
use serde::Serialize;

use crate::artifacts::{write_bytes, write_json, Stamped};
use crate::cli::{BenchArgs, SweepArgs};
use crate::config::{GridSpec, Resolved};
use crate::error::CliError;

pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep.json";
pub const SCALING_CSV: &str = "scaling.csv";
pub const BENCH_JSON: &str = "bench.json";
pub const DEFAULT_WORKER_COUNTS: [usize; 4] = [1, 2, 4, 8];

fn options(resolved: &Resolved) -> RunOptions {
    RunOptions {
        clamp: resolved.run.clamp,
        predict: resolved.run.predict,
        ..RunOptions::new(resolved.workers, resolved.run.seed)
    }
}

#[derive(Serialize)]
struct SweepFile<'a> {
    grids: &'a [GridSpec],
    points: &'a [SweepPoint],
    failures: &'a [SweepFailure],
    best: Option<GridSpec>,
    most_square: Option<GridSpec>,
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let resolved = Resolved::from_args(&args.run)?;
    let grids = if args.grids.is_empty() {
        resolved.file.grids.clone().unwrap_or_default()
    } else {
        args.grids.clone()
    };
    if grids.is_empty() {
        return Err(CliError::config(
            "sweep needs grid shapes (--grids or `grids` in config)",
        ));
    }
    let run = &resolved.run;
    let config = run.model.to_model_config()?;
    let (train, test) = run.data.load_split(run.seed)?;
    let shapes: Vec<_> = grids.iter().map(|g| g.shape()).collect();
    let outcome = run_grid_sweep(
        &train,
        &test,
        &shapes,
        run.partition,
        &config,
        &options(&resolved),
    )?;

    let mut csv = Vec::new();
    outcome.write_csv(&mut csv)?;
    let out = &resolved.out;
    write_bytes(&out.join(SWEEP_CSV), &csv)?;
    let spec = |p: &SweepPoint| GridSpec::new(p.row_groups, p.col_groups);
    let file = SweepFile {
        grids: &grids,
        points: &outcome.points,
        failures: &outcome.failures,
        best: outcome.best().map(spec),
        most_square: outcome.most_square().map(spec),
    };
    write_json(
        &out.join(SWEEP_JSON),
        &Stamped::new(&run.hash(), Some(run.seed), file),
    )?;
    for p in &outcome.points {
        println!(
            "{}x{}: rmse {:.4}, {:.2}s, aspect {:.3}",
            p.row_groups, p.col_groups, p.rmse, p.seconds, p.aspect
        );
    }
    for f in &outcome.failures {
        eprintln!("{}x{} failed: {}", f.row_groups, f.col_groups, f.error);
    }
    println!("wrote {}", out.join(SWEEP_CSV).display());
    Ok(())
}

#[derive(Serialize)]
struct BenchFile<'a> {
    grid: GridSpec,
    worker_counts: &'a [usize],
    points: &'a [ScalingPoint],
    reports: &'a [RunReport],
}

pub fn bench(args: &BenchArgs) -> Result<(), CliError> {
    let resolved = Resolved::from_args(&args.run)?;
    let counts = if args.worker_counts.is_empty() {
        resolved
            .file
            .worker_counts
            .clone()
            .unwrap_or_else(|| DEFAULT_WORKER_COUNTS.to_vec())
    } else {
        args.worker_counts.clone()
    };
    if counts.is_empty() || counts.contains(&0) {
        return Err(CliError::config("worker counts must be positive"));
    }
    let run = &resolved.run;
    let config = run.model.to_model_config()?;
    let (train, test) = run.data.load_split(run.seed)?;
    let shape = run.grid.resolve(train.n_rows(), train.n_cols());
    let grid = build_grid(
        &train,
        shape.row_groups,
        shape.col_groups,
        run.partition,
        run.seed,
    )?;
    let outcome = run_scaling_bench(&train, &test, &grid, &counts, &config, &options(&resolved))?;

    let mut csv = Vec::new();
    outcome.write_csv(&mut csv)?;
    let out = &resolved.out;
    write_bytes(&out.join(SCALING_CSV), &csv)?;
    let file = BenchFile {
        grid: shape,
        worker_counts: &counts,
        points: &outcome.points,
        reports: &outcome.reports,
    };
    write_json(
        &out.join(BENCH_JSON),
        &Stamped::new(&run.hash(), Some(run.seed), file),
    )?;
    for p in &outcome.points {
        println!(
            "{} workers: {:.3}s, speedup {:.2}{}",
            p.workers,
            p.seconds,
            p.speedup,
            if p.pareto { ", pareto" } else { "" }
        );
    }
    println!("wrote {}", out.join(SCALING_CSV).display());
    Ok(())
}
