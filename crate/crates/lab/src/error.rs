use std::io;

use volterra_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{0}")]
    Param(String),
    #[error("{0}")]
    Numerical(String),
    #[error("cannot read or write {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("invalid config: {0}")]
    Config(#[from] serde_json::Error),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl LabError {
    /// 1 for bad input, 2 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

impl From<CoreError> for LabError {
    fn from(e: CoreError) -> Self {
        if e.is_numerical() {
            LabError::Numerical(e.to_string())
        } else {
            LabError::Param(e.to_string())
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;

macro_rules! param {
    ($($arg:tt)*) => {
        $crate::error::LabError::Param(format!($($arg)*))
    };
}

pub(crate) use param;
