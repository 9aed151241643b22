use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{BlockId, Phase, PhasePlan};
use crate::Result;

pub const BLOCK_CSV_HEADER: &str = "phase,i,j,rows,cols,nnz,sweeps,seconds";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub phase: Phase,
    pub i: usize,
    pub j: usize,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub sweeps: usize,
    pub threads: usize,
    pub seconds: f64,
    /// Position of the block's start in the run's event sequence.
    pub start_seq: u64,
    /// Position of the block's completion in the run's event sequence.
    pub end_seq: u64,
    /// Loaded from a checkpoint rather than sampled in this run.
    pub resumed: bool,
}

impl BlockReport {
    pub fn id(&self) -> BlockId {
        BlockId::new(self.i, self.j)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase: Phase,
    pub blocks: usize,
    /// Wall-clock of the phase, barrier to barrier.
    pub seconds: f64,
    /// Sum of the phase's per-block times.
    pub block_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub n_test: usize,
    pub rmse_block: Option<f64>,
    pub rmse_aggregated: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub workers: usize,
    pub grid: (usize, usize),
    pub blocks: Vec<BlockReport>,
    pub phases: Vec<PhaseReport>,
    /// Sum of the phase wall-clocks.
    pub total_seconds: f64,
    pub sweeps: u64,
    pub row_updates: u64,
    pub rating_visits: u64,
    pub rows_per_sec: f64,
    pub ratings_per_sec: f64,
    pub metrics: RunMetrics,
}

impl RunReport {
    pub fn phase(&self, phase: Phase) -> Option<&PhaseReport> {
        self.phases.iter().find(|p| p.phase == phase)
    }

    pub fn block(&self, id: BlockId) -> Option<&BlockReport> {
        self.blocks.iter().find(|b| b.id() == id)
    }

    /// Whether every block started after all of its prior sources finished.
    pub fn dependencies_respected(&self, plan: &PhasePlan) -> bool {
        self.blocks.iter().all(|b| {
            plan.sources(b.id())
                .dependencies()
                .all(|dep| self.block(dep).is_some_and(|d| d.end_seq < b.start_seq))
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One line per block under [`BLOCK_CSV_HEADER`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(BLOCK_CSV_HEADER.split(','))?;
        for b in &self.blocks {
            w.write_record([
                b.phase.label().to_owned(),
                b.i.to_string(),
                b.j.to_string(),
                b.rows.to_string(),
                b.cols.to_string(),
                b.nnz.to_string(),
                b.sweeps.to_string(),
                b.seconds.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}
