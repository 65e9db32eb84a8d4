use thiserror::Error;

/// Errors produced by grid, field, energy, auction and solver operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid spec mismatch between operands")]
    SpecMismatch,

    #[error("time parameter must be positive, got {0}")]
    NonPositiveTau(f64),

    #[error("invalid field data: {0}")]
    InvalidField(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("infeasible volume targets: {0}")]
    Infeasible(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient history: {0}")]
    History(String),

    #[error("empty field")]
    EmptyField,

    #[error("shape error: {0}")]
    Shape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed FLD file: {0}")]
    MalformedFld(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
