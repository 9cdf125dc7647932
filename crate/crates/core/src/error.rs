use thiserror::Error;

/// Errors produced by the geometry kernels, solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("Sylvester operator singular")]
    SylvesterSingular,

    #[error("inverse retraction undefined: {0}")]
    InverseRetractionUndefined(String),

    #[error("vector transport failed: {0}")]
    Transport(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
