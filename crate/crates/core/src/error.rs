use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, lengths or values that violate an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative kernel ran out of iterations.
    #[error("numerical failure: {what} did not converge within {iterations} iterations")]
    NumericalFailure { what: &'static str, iterations: usize },

    /// A dense representation would exceed the supported size.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// The state has zero norm (or zero overlap) where a direction is needed.
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
