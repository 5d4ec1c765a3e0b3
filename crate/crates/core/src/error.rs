use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("did not converge: {0}")]
    NotConverged(String),
    #[error("portfolio constraints are infeasible: {0}")]
    InfeasibleConstraints(String),
    #[error("returns have zero variance")]
    DegenerateReturns,
    #[error("sample covariance is singular")]
    SingularSampleCovariance,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
