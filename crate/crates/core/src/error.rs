//! Shared error type for the numerical core.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid configuration: {0}")]
    GridConfig(String),

    #[error("hyperbolicity violated: {0}")]
    Hyperbolicity(String),

    #[error("operator order {order} exceeds configured maximum {max}")]
    OperatorOrder { order: usize, max: usize },

    #[error("poisson solve: {0}")]
    Poisson(String),

    #[error("data family: {0}")]
    DataFamily(String),

    #[error("norm evaluation: {0}")]
    Norm(String),

    #[error("run stopped at t = {time}: {reason}")]
    Blowup { time: f64, reason: String },

    #[error("checkpoint format: {0}")]
    Format(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
