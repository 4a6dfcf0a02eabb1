use thiserror::Error;

/// Errors raised by the numerical operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point:?} lies outside the admissible domain ({reason})")]
    Domain { point: Vec<f64>, reason: String },

    #[error("form degree error: {0}")]
    Degree(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("canonicalization failed at {witness:?}: t-component of the characteristic field vanishes")]
    Canonicalization { witness: Vec<f64> },

    #[error("degenerate frame at {witness:?}: {reason}")]
    Frame { witness: Vec<f64>, reason: String },

    #[error("degenerate {what} at {witness:?}")]
    Degenerate { what: String, witness: Vec<f64> },

    #[error("transversality failure at {witness:?}: {reason}")]
    Transversality { witness: Vec<f64>, reason: String },

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("characteristic crossing at t = {crossing_time} precedes the first grid line")]
    EarlyCrossing { crossing_time: f64 },

    #[error("no admissible shock: {0}")]
    NoAdmissibleShock(String),

    #[error("unsupported flux: {0}")]
    UnsupportedFlux(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(point: &[f64], reason: impl Into<String>) -> Self {
        Error::Domain {
            point: point.to_vec(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
