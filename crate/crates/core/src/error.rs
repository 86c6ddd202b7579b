use thiserror::Error;

/// Errors produced by the clustering toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected dim={expected}, got dim={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance too large for enumeration: {candidates} candidates choose k={k} exceeds budget {budget}")]
    BudgetExceeded {
        candidates: usize,
        k: usize,
        budget: u64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, ClusterError>;

pub(crate) fn invalid(msg: impl Into<String>) -> ClusterError {
    ClusterError::InvalidParameter(msg.into())
}
