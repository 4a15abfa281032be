use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, KsvdError>;

#[derive(Debug, Error)]
pub enum KsvdError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("SNE normalizer underflowed to zero for row {row} (gamma = {gamma}); the bandwidth is too small")]
    SneUnderflow { row: usize, gamma: f64 },

    #[error("rank deficient: {requested} components requested but only {achieved} positive singular values ({hint})")]
    RankDeficient { requested: usize, achieved: usize, hint: &'static str },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: u64, column: usize, message: String },

    #[error("invalid data: {0}")]
    Data(String),
}

impl KsvdError {
    /// `true` for failures of a numerical routine as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, KsvdError::Numerical(_) | KsvdError::RankDeficient { .. } | KsvdError::SneUnderflow { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        KsvdError::Io { path: path.into(), source }
    }
}
