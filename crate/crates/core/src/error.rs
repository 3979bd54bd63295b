use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector norm {0:e} is too small to normalize")]
    ZeroVector(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("value {0} outside the domain [0, 1]")]
    Domain(f64),
    #[error("invalid amplitudes: {0}")]
    InvalidAmplitudes(String),
    #[error("invalid measurement model: {0}")]
    InvalidModel(String),
    #[error("invalid gain schedule: {0}")]
    InvalidSchedule(String),
    #[error("baseline coincidence count was zero twice in a row")]
    DegenerateBaseline,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("probe set spans fewer than 2 linearly independent states")]
    InsufficientProbes,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("iteration {k}: {source}")]
    AtIteration { k: usize, source: Box<Error> },
    #[error("trial {trial}: {source}")]
    AtTrial { trial: usize, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;
