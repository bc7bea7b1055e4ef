use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} is below -{tol:e}")]
    NotPositiveSemidefinite { eigenvalue: f64, tol: f64 },

    #[error("sequence is not lacunary at index {index}: {reason}")]
    NotLacunary { index: usize, reason: String },

    #[error("integer overflow while generating term {index}")]
    Overflow { index: usize },

    #[error("{what} budget exceeded: {required} > {budget}")]
    Budget {
        what: &'static str,
        required: u64,
        budget: u64,
    },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
