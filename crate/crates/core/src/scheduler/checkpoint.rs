//! Per-block results persisted at phase boundaries, so later phases can be
//! re-run without repeating earlier ones.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BlockId, Phase};
use crate::gibbs::ChainOutput;
use crate::posterior::{from_records, to_records, PredictionAccumulator, SummaryRecord};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockCheckpoint {
    /// Identifies the inputs and settings the block was run with.
    pub fingerprint: String,
    pub block: BlockId,
    pub phase: Phase,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub u: Vec<SummaryRecord>,
    pub v: Vec<SummaryRecord>,
    /// Local query cells, parallel to `predictions`.
    pub query: Vec<(usize, usize)>,
    pub predictions: Vec<PredictionAccumulator>,
    pub row_updates: u64,
    pub rating_visits: u64,
    pub sweep_seconds: Vec<f64>,
}

impl BlockCheckpoint {
    pub fn new(
        fingerprint: &str,
        block: BlockId,
        phase: Phase,
        nnz: usize,
        query: &[(usize, usize)],
        chain: &ChainOutput,
    ) -> Self {
        BlockCheckpoint {
            fingerprint: fingerprint.to_owned(),
            block,
            phase,
            rows: chain.u.len(),
            cols: chain.v.len(),
            nnz,
            u: to_records(&chain.u, |r| r),
            v: to_records(&chain.v, |c| c),
            query: query.to_vec(),
            predictions: chain.predictions.clone(),
            row_updates: chain.row_updates,
            rating_visits: chain.rating_visits,
            sweep_seconds: chain.sweep_seconds.clone(),
        }
    }

    pub fn to_chain_output(&self) -> Result<ChainOutput> {
        let u = from_records(&self.u)?;
        let v = from_records(&self.v)?;
        if u.len() != self.rows || v.len() != self.cols {
            return Err(Error::Checkpoint(format!(
                "block {} holds {}x{} summaries for a {}x{} block",
                self.block,
                u.len(),
                v.len(),
                self.rows,
                self.cols
            )));
        }
        if self.predictions.len() != self.query.len() {
            return Err(Error::Checkpoint(format!(
                "block {} has {} predictions for {} query cells",
                self.block,
                self.predictions.len(),
                self.query.len()
            )));
        }
        Ok(ChainOutput {
            u,
            v,
            predictions: self.predictions.clone(),
            sweep_seconds: self.sweep_seconds.clone(),
            row_updates: self.row_updates,
            rating_visits: self.rating_visits,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        write_atomic(&block_path(dir, self.block), &serde_json::to_vec(self)?)
    }

    /// `Ok(None)` when the file does not exist.
    pub fn load(dir: &Path, block: BlockId) -> Result<Option<Self>> {
        let path = block_path(dir, block);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let cp: BlockCheckpoint = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if cp.block != block {
            return Err(Error::Checkpoint(format!(
                "{} holds block {}, expected {block}",
                path.display(),
                cp.block
            )));
        }
        Ok(Some(cp))
    }
}

pub fn block_path(dir: &Path, block: BlockId) -> PathBuf {
    dir.join(format!("block_{}_{}.json", block.i, block.j))
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
