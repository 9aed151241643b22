//! `convert`, `split` and `stats`.

use std::path::{Path, PathBuf};

use bmfpp::data::{compute_stats, train_test_split, write_csv_triplets, write_matrix_market};
use bmfpp::data::{DatasetStats, SparseRatings};
use serde::Serialize;

use crate::artifacts::{write_json, write_via, Stamped};
use crate::cli::{ConvertArgs, SplitArgs, StatsArgs};
use crate::config::DEFAULT_TEST_FRACTION;
use crate::config::{hash_of, DataFormat, DataSpec, FileConfig, DEFAULT_SEED};
use crate::error::CliError;

fn write_ratings(data: &SparseRatings, path: &Path, format: DataFormat) -> Result<(), CliError> {
    write_via(path, |tmp| match format {
        DataFormat::Mm => write_matrix_market(data, tmp),
        DataFormat::Csv => write_csv_triplets(data, tmp, true),
    })
}

/// Sidecar manifest path for a data file: `x.csv` → `x.csv.json`.
fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

#[derive(Serialize)]
struct ConvertConfig<'a> {
    input: &'a DataSpec,
    to: DataFormat,
}

#[derive(Serialize)]
struct ConvertManifest {
    input: PathBuf,
    output: PathBuf,
    format: DataFormat,
    n_rows: usize,
    n_cols: usize,
    n_ratings: usize,
}

pub fn convert(args: &ConvertArgs) -> Result<(), CliError> {
    let file = FileConfig::from_args(&args.data)?;
    let spec = DataSpec::resolve(&args.data, &file)?;
    let data = spec.load()?;
    let to = args.to.unwrap_or_else(|| DataFormat::infer(&args.out));
    write_ratings(&data, &args.out, to)?;
    let hash = hash_of(&ConvertConfig { input: &spec, to });
    let manifest = ConvertManifest {
        input: spec.path.clone(),
        output: args.out.clone(),
        format: to,
        n_rows: data.n_rows(),
        n_cols: data.n_cols(),
        n_ratings: data.len(),
    };
    write_json(&sidecar(&args.out), &Stamped::new(&hash, None, manifest))?;
    println!(
        "wrote {} ({}x{}, {} ratings)",
        args.out.display(),
        data.n_rows(),
        data.n_cols(),
        data.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct SplitConfig<'a> {
    input: &'a DataSpec,
    test_fraction: f64,
    seed: u64,
    to: DataFormat,
}

#[derive(Serialize)]
struct SplitManifest {
    input: PathBuf,
    train: PathBuf,
    test: PathBuf,
    test_fraction: f64,
    n_rows: usize,
    n_cols: usize,
    n_train: usize,
    n_test: usize,
}

pub fn split(args: &SplitArgs) -> Result<(), CliError> {
    let file = FileConfig::from_args(&args.data)?;
    let spec = DataSpec::resolve(&args.data, &file)?;
    let test_fraction = args
        .test_fraction
        .or(file.test_fraction)
        .unwrap_or(DEFAULT_TEST_FRACTION);
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CliError::config(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let out = args
        .out
        .clone()
        .or_else(|| file.out.clone())
        .ok_or_else(|| CliError::config("split needs --out"))?;
    let data = spec.load()?;
    let (train, test) = train_test_split(&data, test_fraction, seed)?;
    let ext = args.to.extension();
    let train_path = out.join(format!("train.{ext}"));
    let test_path = out.join(format!("test.{ext}"));
    write_ratings(&train, &train_path, args.to)?;
    write_ratings(&test, &test_path, args.to)?;
    let hash = hash_of(&SplitConfig {
        input: &spec,
        test_fraction,
        seed,
        to: args.to,
    });
    let manifest = SplitManifest {
        input: spec.path.clone(),
        train: train_path.clone(),
        test: test_path.clone(),
        test_fraction,
        n_rows: data.n_rows(),
        n_cols: data.n_cols(),
        n_train: train.len(),
        n_test: test.len(),
    };
    write_json(
        &out.join("split.json"),
        &Stamped::new(&hash, Some(seed), manifest),
    )?;
    println!(
        "wrote {} ({} ratings) and {} ({} ratings)",
        train_path.display(),
        train.len(),
        test_path.display(),
        test.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct StatsReport<'a> {
    input: &'a Path,
    #[serde(flatten)]
    stats: DatasetStats,
    rating_min: f64,
    rating_max: f64,
    rating_mean: f64,
}

pub fn stats(args: &StatsArgs) -> Result<(), CliError> {
    let file = FileConfig::from_args(&args.data)?;
    let spec = DataSpec::resolve(&args.data, &file)?;
    let data = spec.load()?;
    let scale = data.scale();
    let report = StatsReport {
        input: &spec.path,
        stats: compute_stats(&data)?,
        rating_min: scale.min,
        rating_max: scale.max,
        rating_mean: data.mean_value().unwrap_or(f64::NAN),
    };
    let stamped = Stamped::new(&hash_of(&spec), None, report);
    let text = serde_json::to_string_pretty(&stamped).expect("stats serialize");
    println!("{text}");
    if let Some(out) = &args.out {
        write_json(out, &stamped)?;
    }
    Ok(())
}
