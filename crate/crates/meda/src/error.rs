use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the CLI, each mapped to a process exit status.
#[derive(Debug, Error)]
pub enum MedaError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("schema mismatch in {path}: {reason}")]
    Schema { path: PathBuf, reason: String },

    #[error("invalid plan: {0}")]
    Plan(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("calibration: {0}")]
    Calibration(String),

    #[error(transparent)]
    Core(#[from] meda_core::Error),
}

impl MedaError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn schema(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Self::Schema {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// 1 invalid input, 2 I/O failure, 3 calibrations missing or not bracketing.
    pub fn exit_code(&self) -> u8 {
        match self {
            MedaError::Io { .. } => 2,
            MedaError::Calibration(_) => 3,
            MedaError::Core(meda_core::Error::OutsideCalibration { .. }) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, MedaError>;
