use thiserror::Error;

/// Errors raised by estimation, simulation and data ingestion.
///
/// Degenerate designs are reported as values so that Monte Carlo cells can
/// count them instead of propagating `NaN`.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel is not integrable: {0}")]
    NotIntegrable(String),

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("degenerate studentization: {0}")]
    DegenerateStudentization(String),

    #[error("bandwidth m = {m} is invalid for n = {n} (need 4 <= m < n/2)")]
    Bandwidth { m: usize, n: usize },

    #[error("row {row}: {msg}")]
    Ingest { row: usize, msg: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
