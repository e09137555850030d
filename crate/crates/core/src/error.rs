use thiserror::Error;

/// Errors raised by the simulation and estimation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("observable is not of local tensor-product form: {0}")]
    NotTensorSplit(String),
    #[error("no kernel for setting {setting} and label {label}")]
    MissingKernel { setting: u8, label: u32 },
    #[error("estimate undefined: {0}")]
    UndefinedEstimate(String),
    #[error("time tags not sorted at index {0}")]
    UnsortedTags(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
