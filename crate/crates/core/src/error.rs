use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point ({x}, {y}) lies outside the unit square")]
    OutOfDomain { x: f64, y: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The subproblem solver gave up; `best` is the best coefficient vector seen.
    #[error("solver failure after {iterations} iterations: {message}")]
    SolverFailure {
        message: String,
        iterations: usize,
        best: Vec<f64>,
    },

    #[error("reference atoms {0} and {1} are closer than twice the matching radius")]
    AmbiguousReference(usize, usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
