use std::path::PathBuf;

use thiserror::Error;

/// Everything a command can fail with, mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Core(#[from] iga_core::Error),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 0 success, 1 validation or parse failure, 2 non-convergence, 3 I/O failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Invalid(_) => 1,
            CliError::Core(iga_core::Error::PositionNotConverged { .. }) | CliError::NotConverged(_) => 2,
            CliError::Core(_) => 1,
            CliError::Io { .. } | CliError::Csv { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
