use thiserror::Error;

/// Errors raised by the numerical and domain layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {found} entries, expected {expected}")]
    NotSquare {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("matrix must have dimension at least 1")]
    EmptyMatrix,

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (relative residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("trace must be 1, found {trace}")]
    InvalidTrace { trace: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("degenerate observable (min eigenvalue gap {gap:.3e})")]
    Degenerate { gap: f64 },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("time grid is empty")]
    EmptyGrid,

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid measurement step: {0}")]
    InvalidStep(String),

    #[error("conditioning event has zero probability")]
    ZeroConditioningEvent,

    #[error("invalid classical system: {0}")]
    InvalidSystem(String),

    #[error("operation supports only dimension 2, found {0}")]
    UnsupportedDimension(usize),

    #[error("invalid qubit parameters: {0}")]
    InvalidParams(String),

    #[error("shots must be at least 1")]
    NoShots,
}

pub type Result<T> = std::result::Result<T, Error>;
