use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cost matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("problem too large for the exact solver: {rows}x{cols} exceeds {limit} cells")]
    TooLarge { rows: usize, cols: usize, limit: usize },

    /// Plain-domain Sinkhorn scalings overflowed or underflowed; retry with
    /// the log-domain solver.
    #[error("sinkhorn scalings overflowed at iteration {iteration}; use the log-domain solver")]
    NumericalOverflow { iteration: usize },

    /// The exact solver ended with mass on an artificial arc.
    #[error("exact solver reported an infeasible transportation problem (residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("regressor training failed in stage `{stage}`: {reason}")]
    Regression { stage: &'static str, reason: String },

    #[error("labels must contain both classes")]
    SingleClass,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("model document: {0}")]
    ModelFormat(String),

    #[error("unsupported model format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u64, supported: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
