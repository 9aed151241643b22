//! Output files. Every write goes through a temporary file in the target
//! directory and a rename, and every JSON artifact carries the config hash
//! and seed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A JSON artifact body tagged with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_hash: String,
    /// `None` for commands that draw no random numbers.
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Stamped<T> {
    pub fn new(config_hash: &str, seed: Option<u64>, body: T) -> Self {
        Stamped {
            config_hash: config_hash.to_owned(),
            seed,
            body,
        }
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    bmfpp::scheduler::write_atomic(path, bytes).map_err(|e| CliError::output(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::output(path, e))?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Runs `write` against a temporary path next to `path`, then renames the
/// result into place.
pub fn write_via(
    path: &Path,
    write: impl FnOnce(&Path) -> bmfpp::Result<()>,
) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::output(path, e))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::output(path, e))?;
    write(tmp.path()).map_err(|e| CliError::output(path, e))?;
    tmp.persist(path)
        .map_err(|e| CliError::output(path, e.error))?;
    Ok(())
}
