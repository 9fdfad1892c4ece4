use thiserror::Error;

pub type Result<T, E = DepthError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DepthError {
    #[error("empty sample")]
    EmptySample,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("ragged rows: row {row} has {found} values, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("degenerate dispersion matrix")]
    DegenerateDispersion,
    #[error("undefined correlation")]
    UndefinedCorrelation,
    #[error("degenerate weights")]
    DegenerateWeights,
    #[error("grid mismatch")]
    GridMismatch,
    #[error("M-estimator did not converge after {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        last_mu: Vec<f64>,
        last_sigma: Vec<f64>,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
