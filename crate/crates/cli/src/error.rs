use drlc_core::Error;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    /// An artifact does not match what the run expects.
    #[error("{0}")]
    Mismatch(String),

    #[error(transparent)]
    Core(#[from] Error),
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Mismatch(_) => EXIT_MISMATCH,
            CliError::Core(e) => match e {
                Error::InvalidArgument(_) | Error::NotFound(_) | Error::Json(_) => EXIT_USAGE,
                Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_USAGE,
                Error::NumericalFailure(_) => EXIT_NUMERIC,
                Error::CorruptCheckpoint { .. } | Error::ArchitectureMismatch(_) => EXIT_MISMATCH,
                _ => EXIT_FAILURE,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
