use std::path::PathBuf;

use thiserror::Error;

use crate::scheduler::BlockId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Cholesky hit a non-positive pivot at the given (0-based) index.
    #[error("matrix is not positive definite (pivot {pivot} is {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("aggregating {side} row {row}: {source}")]
    Aggregation {
        side: &'static str,
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("block {block}: {source}")]
    Block {
        block: BlockId,
        #[source]
        source: Box<Error>,
    },

    #[error("{} truth cells have no prediction (first: {:?})", missing.len(), missing.first())]
    Coverage { missing: Vec<(usize, usize)> },

    #[error("checkpoint mismatch: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for failures of the numerical core, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPositiveDefinite { .. } | Error::Aggregation { .. } => true,
            Error::Block { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
