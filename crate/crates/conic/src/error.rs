use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("row {row} has {found} coefficients, expected {expected}")]
    DimensionMismatch { row: usize, expected: usize, found: usize },
    #[error("variable {index} has an empty bound interval")]
    EmptyBounds { index: usize },
    #[error("matrix is not symmetric: |A[{row},{col}] - A[{col},{row}]| = {deviation:e}")]
    NotSymmetric { row: usize, col: usize, deviation: f64 },
    #[error("matrix is not Hermitian: deviation {deviation:e} at ({row},{col})")]
    NotHermitian { row: usize, col: usize, deviation: f64 },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("semidefinite program has dimension zero")]
    EmptyDimension,
    #[error("semidefinite program has no constraints")]
    NoConstraints,
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("malformed problem dump at line {line}: {message}")]
    Parse { line: usize, message: String },
}
