use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid grid, solver or command configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity that should vanish up to round-off did not.
    #[error("numerical consistency check failed: {0}")]
    Consistency(String),

    /// Non-finite energy during minimization. Carries the iteration at which it happened.
    #[error("numerical failure at iteration {iteration}: {message}")]
    NumericalFailure { iteration: usize, message: String },

    /// Line search could not find a decreasing step.
    #[error("line search stalled at iteration {iteration} after {halvings} halvings")]
    Stalled { iteration: usize, halvings: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
