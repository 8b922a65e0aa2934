use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subsystem shape: {0}")]
    InvalidShape(String),

    #[error("state is not normalized: norm deviates from 1 by {0:e}")]
    NotNormalized(f64),

    #[error("matrix is not Hermitian: max |M - M^H| = {0:e}")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite: smallest eigenvalue {0:e}")]
    NotPsd(f64),

    #[error("trace deviates from 1 by {0:e}")]
    TraceNotOne(f64),

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),

    #[error("functional `{name}` failed registration: {reason}")]
    Registration { name: String, reason: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
