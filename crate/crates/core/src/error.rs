use thiserror::Error;

/// Errors raised by the discretization and model-reduction routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("singular matrix in {context} (smallest pivot magnitude {pivot:e})")]
    Singular { context: &'static str, pivot: f64 },

    #[error("positivity violated: smallest eigenvalue of (A0 + A0^t - X)/2 is {min_eigenvalue:e}")]
    PositivityViolated { min_eigenvalue: f64 },

    #[error("rank {requested} requested but only {available} available in {context}")]
    RankTooLarge {
        context: &'static str,
        requested: usize,
        available: usize,
    },

    #[error("malformed snapshot file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
