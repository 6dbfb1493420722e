use thiserror::Error;

use crate::twf::TwfTrace;

pub type Result<T, E = TwfError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TwfError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The norm estimate was not positive, so the initializer has no scale.
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    /// Power iteration ran out of iterations. Carries the best iterate seen.
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        vector: Vec<f64>,
        value: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("iteration diverged at step {iteration}: {reason}")]
    Divergence {
        iteration: usize,
        reason: String,
        partial: Box<TwfTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> TwfError {
    TwfError::InvalidArgument(msg.into())
}
