use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("leakage specs are incompatible: {0}")]
    IncompatibleLeakage(String),
    #[error("inconsistent statistics: {0}")]
    Inconsistent(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Conic(#[from] conic::ConicError),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
