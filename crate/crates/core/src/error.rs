use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("road network has no lanes")]
    NoLane,

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("corrupt checkpoint at byte {offset}: {reason}")]
    CorruptCheckpoint { offset: usize, reason: String },

    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
