use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fractional order s must lie in (0, 1), got {0}")]
    InvalidOrder(f64),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("regime violation: {0}")]
    Regime(String),

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("negative value {value:e} at node {node} after step (sup-norm {sup:e})")]
    NegativeValue { node: usize, value: f64, sup: f64 },

    #[error("non-monotone Picard iterate at node {node} (iteration {iteration})")]
    NonMonotoneIterate { node: usize, iteration: usize },

    #[error("iteration cap of {0} reached without convergence")]
    IterationCap(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("mass leakage {leak:e} exceeds tolerance {tol:e}")]
    MassLeakage { leak: f64, tol: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
