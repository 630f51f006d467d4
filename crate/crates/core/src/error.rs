use thiserror::Error;

/// Errors raised across the toolkit.
///
/// The variants are grouped so that a front end can map them onto exit
/// codes: `Domain` is a caller mistake about parameters, `Invalid` is a
/// malformed or inconsistent input object, `NotCertified` is a numeric
/// routine that could not reach its accuracy target.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Domain(String),

    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("not certified: {what} (error estimate {error_estimate:e})")]
    NotCertified { what: String, error_estimate: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("uniform noise: C2 = {c2}, C1' = {c1_prime} (corner formula does not apply)")]
    UniformNoise { c2: f64, c1_prime: f64 },

    #[error("condition {condition} violated: {detail}")]
    Applicability { condition: String, detail: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
