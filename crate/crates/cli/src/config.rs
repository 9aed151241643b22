//! Run configuration: a TOML file merged with command-line flags, flags
//! winning.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bmfpp::data::{suggest_grid, PartitionStrategy, SparseRatings};
use bmfpp::gibbs::{
    ModelConfig, NormalWishartPrior, DEFAULT_BURN_IN, DEFAULT_SAMPLES, DEFAULT_TAU,
};
use bmfpp::scheduler::PredictMode;
use clap::ValueEnum;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::cli::{DataArgs, PartitionArg, PredictArg, RunArgs};
use crate::error::CliError;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_OUT: &str = "bmfpp-out";
pub const WORKERS_ENV: &str = "BMFPP_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    /// MatrixMarket coordinate.
    Mm,
    /// `row,col,value` triplets.
    Csv,
}

impl DataFormat {
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("mtx" | "mm") => DataFormat::Mm,
            _ => DataFormat::Csv,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            DataFormat::Mm => "mtx",
            DataFormat::Csv => "csv",
        }
    }
}

/// Grid shape written `IxJ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub row_groups: usize,
    pub col_groups: usize,
}

impl GridSpec {
    pub fn new(row_groups: usize, col_groups: usize) -> Self {
        GridSpec {
            row_groups,
            col_groups,
        }
    }

    pub fn shape(self) -> (usize, usize) {
        (self.row_groups, self.col_groups)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.row_groups, self.col_groups)
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("grid `{s}` is not of the form IxJ with positive I and J");
        let (i, j) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let i: usize = i.parse().map_err(|_| bad())?;
        let j: usize = j.parse().map_err(|_| bad())?;
        if i == 0 || j == 0 {
            return Err(bad());
        }
        Ok(GridSpec::new(i, j))
    }
}

impl Serialize for GridSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub format: Option<DataFormat>,
    pub header: Option<bool>,
    pub test_fraction: Option<f64>,
    pub grid: Option<GridSpec>,
    pub target_blocks: Option<usize>,
    pub partition: Option<PartitionStrategy>,
    pub k: Option<usize>,
    pub tau: Option<f64>,
    pub burn_in: Option<usize>,
    pub samples: Option<usize>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub clamp: Option<bool>,
    pub predict: Option<PredictMode>,
    pub hyperprior: Option<HyperpriorFile>,
    /// Shapes for `sweep`.
    pub grids: Option<Vec<GridSpec>>,
    /// Counts for `bench`.
    pub worker_counts: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperpriorFile {
    pub mu0: Option<Vec<f64>>,
    pub beta0: Option<f64>,
    pub w0: Option<Vec<Vec<f64>>>,
    pub nu0: Option<f64>,
}

impl FileConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let mut file: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut file.data, &mut file.test, &mut file.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(file)
    }

    pub fn from_args(args: &DataArgs) -> Result<Self, CliError> {
        match &args.config {
            Some(path) => Self::load(path),
            None => Ok(FileConfig::default()),
        }
    }
}

/// Where a dataset lives and how to read it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub path: PathBuf,
    /// Held-out file; when absent the test set is a seeded split of `path`.
    pub test: Option<PathBuf>,
    /// Explicit format; otherwise inferred per file from its extension.
    pub format: Option<DataFormat>,
    pub header: bool,
    pub test_fraction: f64,
}

impl DataSpec {
    pub fn resolve(args: &DataArgs, file: &FileConfig) -> Result<Self, CliError> {
        let path = args
            .data
            .clone()
            .or_else(|| file.data.clone())
            .ok_or_else(|| CliError::config("no dataset given (--data or `data` in config)"))?;
        Ok(DataSpec {
            path,
            test: file.test.clone(),
            format: args.format.or(file.format),
            header: if args.no_header {
                false
            } else {
                file.header.unwrap_or(true)
            },
            test_fraction: file.test_fraction.unwrap_or(DEFAULT_TEST_FRACTION),
        })
    }

    pub fn format_of(&self, path: &Path) -> DataFormat {
        self.format.unwrap_or_else(|| DataFormat::infer(path))
    }

    pub fn load(&self) -> Result<SparseRatings, CliError> {
        load_ratings(&self.path, self.format_of(&self.path), self.header, None)
    }

    /// Training and test sets: the explicit test file, or a seeded split.
    pub fn load_split(&self, seed: u64) -> Result<(SparseRatings, SparseRatings), CliError> {
        let data = self.load()?;
        match &self.test {
            Some(test) => {
                let dims = (data.n_rows(), data.n_cols());
                let held = load_ratings(test, self.format_of(test), self.header, Some(dims))?;
                Ok((data, held))
            }
            None => Ok(bmfpp::data::train_test_split(
                &data,
                self.test_fraction,
                seed,
            )?),
        }
    }
}

/// Loads ratings, checking MatrixMarket dimensions against `dims` or
/// imposing them on CSV input.
pub fn load_ratings(
    path: &Path,
    format: DataFormat,
    header: bool,
    dims: Option<(usize, usize)>,
) -> Result<SparseRatings, CliError> {
    if !path.exists() {
        return Err(CliError::data(format!("{} does not exist", path.display())));
    }
    let data = match format {
        DataFormat::Mm => bmfpp::data::load_matrix_market(path)?,
        DataFormat::Csv => bmfpp::data::load_csv_triplets_with_dims(path, header, dims)?,
    };
    if let Some((rows, cols)) = dims {
        if (data.n_rows(), data.n_cols()) != (rows, cols) {
            return Err(CliError::data(format!(
                "{} is {}x{}, expected {rows}x{cols}",
                path.display(),
                data.n_rows(),
                data.n_cols()
            )));
        }
    }
    Ok(data)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridChoice {
    Shape(GridSpec),
    TargetBlocks(usize),
}

impl GridChoice {
    pub fn resolve(&self, n_rows: usize, n_cols: usize) -> GridSpec {
        match *self {
            GridChoice::Shape(s) => s,
            GridChoice::TargetBlocks(t) => {
                let (i, j) = suggest_grid(n_rows, n_cols, t);
                GridSpec::new(i, j)
            }
        }
    }
}

/// Model settings in serializable form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub k: usize,
    pub tau: f64,
    pub burn_in: usize,
    pub samples: usize,
    pub mu0: Vec<f64>,
    pub beta0: f64,
    pub w0: Vec<Vec<f64>>,
    pub nu0: f64,
}

impl ModelSpec {
    pub fn to_model_config(&self) -> Result<ModelConfig, CliError> {
        let k = self.k;
        if k == 0 {
            return Err(CliError::config("K must be at least 1"));
        }
        if self.mu0.len() != k || self.w0.len() != k || self.w0.iter().any(|r| r.len() != k) {
            return Err(CliError::config(format!(
                "hyperprior mu0 and w0 must have dimension K = {k}"
            )));
        }
        let w0 = DMatrix::from_fn(k, k, |r, c| self.w0[r][c]);
        let prior = NormalWishartPrior::new(
            DVector::from_vec(self.mu0.clone()),
            self.beta0,
            w0,
            self.nu0,
        )
        .map_err(|e| CliError::config(e.to_string()))?;
        let mut config = ModelConfig::new(k)
            .with_tau(self.tau)
            .with_sweeps(self.burn_in, self.samples);
        config.hyperprior = prior;
        config
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(config)
    }
}

/// Everything that determines a run's results. Worker count and output
/// location are deliberately excluded: they do not change any number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataSpec,
    pub grid: GridChoice,
    pub partition: PartitionStrategy,
    pub model: ModelSpec,
    pub seed: u64,
    pub clamp: bool,
    pub predict: PredictMode,
}

impl RunConfig {
    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        hash_of(self)
    }
}

/// SHA-256 of a value's JSON form, as lowercase hex.
pub fn hash_of<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config values serialize");
    hex(&Sha256::digest(bytes))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A run config plus the settings that only affect how it executes.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub run: RunConfig,
    pub file: FileConfig,
    pub workers: usize,
    pub out: PathBuf,
}

impl Resolved {
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let file = FileConfig::from_args(&args.data)?;
        let mut data = DataSpec::resolve(&args.data, &file)?;
        if let Some(t) = &args.test {
            data.test = Some(t.clone());
        }
        if let Some(f) = args.test_fraction {
            data.test_fraction = f;
        }
        if !(data.test_fraction > 0.0 && data.test_fraction < 1.0) {
            return Err(CliError::config(format!(
                "test fraction {} outside (0, 1)",
                data.test_fraction
            )));
        }

        let grid = match (args.grid, args.target_blocks) {
            (Some(g), _) => GridChoice::Shape(g),
            (None, Some(t)) => GridChoice::TargetBlocks(t),
            (None, None) => match (file.grid, file.target_blocks) {
                (Some(_), Some(_)) => {
                    return Err(CliError::config(
                        "config sets both `grid` and `target_blocks`",
                    ))
                }
                (Some(g), None) => GridChoice::Shape(g),
                (None, Some(t)) => GridChoice::TargetBlocks(t),
                (None, None) => GridChoice::Shape(GridSpec::new(1, 1)),
            },
        };
        if grid == GridChoice::TargetBlocks(0) {
            return Err(CliError::config("target blocks must be at least 1"));
        }

        let partition = match args.partition {
            Some(PartitionArg::Random) => PartitionStrategy::Random,
            Some(PartitionArg::Contiguous) => PartitionStrategy::Contiguous,
            None => file.partition.unwrap_or_default(),
        };
        let k = args.k.or(file.k).unwrap_or(DEFAULT_K);
        let hp = file.hyperprior.as_ref();
        let model = ModelSpec {
            k,
            tau: args.tau.or(file.tau).unwrap_or(DEFAULT_TAU),
            burn_in: args.burn_in.or(file.burn_in).unwrap_or(DEFAULT_BURN_IN),
            samples: args.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES),
            mu0: hp.and_then(|h| h.mu0.clone()).unwrap_or(vec![0.0; k]),
            beta0: hp.and_then(|h| h.beta0).unwrap_or(2.0),
            w0: hp.and_then(|h| h.w0.clone()).unwrap_or_else(|| identity(k)),
            nu0: hp.and_then(|h| h.nu0).unwrap_or(k as f64),
        };
        model.to_model_config()?;

        let predict = match args.predict {
            Some(PredictArg::Block) => PredictMode::Block,
            Some(PredictArg::Aggregated) => PredictMode::Aggregated,
            None => file.predict.unwrap_or_default(),
        };
        let workers = match args.workers.or(file.workers) {
            Some(w) => w,
            None => workers_from_env()?,
        };
        if workers == 0 {
            return Err(CliError::config("workers must be at least 1"));
        }
        let out = args
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

        Ok(Resolved {
            run: RunConfig {
                data,
                grid,
                partition,
                model,
                seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
                clamp: args.clamp.or(file.clamp).unwrap_or(false),
                predict,
            },
            file,
            workers,
            out,
        })
    }
}

fn identity(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|r| (0..k).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn workers_from_env() -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("{WORKERS_ENV}={v} is not a worker count"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}
