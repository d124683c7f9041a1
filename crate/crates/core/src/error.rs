use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("region exits the grid: {0}")]
    OutOfGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("too many free slab nodes for exhaustive enumeration: {0}")]
    TooManyFreeNodes(usize),
    #[error("zero mass in ball")]
    ZeroMass,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
