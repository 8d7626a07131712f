use std::path::PathBuf;

use thiserror::Error;

/// Failures of a command. Exit code 1 covers usage and input problems,
/// exit code 2 covers numerical failures inside the toolkit.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        source: Box<CliError>,
    },

    #[error("numerical failure: {0}")]
    Numerical(ebx_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InFile { source, .. } => source.exit_code(),
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }

    /// Classifies a toolkit error raised while building a map from input data.
    pub fn invalid_input(e: ebx_core::Error) -> Self {
        match e {
            ebx_core::Error::DimensionMismatch(m) => CliError::Dimension(m),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<ebx_core::Error> for CliError {
    fn from(e: ebx_core::Error) -> Self {
        match e {
            ebx_core::Error::DimensionMismatch(m) => CliError::Dimension(m),
            ebx_core::Error::InvalidArgument(m) | ebx_core::Error::InvalidTolerance(m) => {
                CliError::Usage(m)
            }
            other => CliError::Numerical(other),
        }
    }
}
