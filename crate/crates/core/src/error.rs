use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {0:?} is the projection singularity (north pole)")]
    SingularPoint([f64; 3]),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("step budget of {budget} exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("truncated tail mass {lost:e} exceeds the bound {bound:e}")]
    TruncationOverflow { lost: f64, bound: f64 },

    #[error("event does not match a known asymptotic shape")]
    ShapeMismatch,

    #[error("sample sizes differ: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
