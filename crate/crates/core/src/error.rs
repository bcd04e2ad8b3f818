use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index out of range: {0}")]
    Bounds(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("domain truncation: {0}")]
    DomainTruncation(String),

    #[error("scheme inconsistency at square {square}: discrepancy {discrepancy:e} at {location}")]
    SchemeInconsistency {
        square: usize,
        discrepancy: f64,
        location: String,
    },

    #[error("scale N = {n} too small for the no-double-expiry condition; minimal admissible N is {n_min}")]
    ScaleTooSmall { n: u64, n_min: u64 },

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether this error stems from user input rather than a failed check.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Parse(_)
                | Error::Shape(_)
                | Error::Precondition(_)
                | Error::DomainTruncation(_)
                | Error::ScaleTooSmall { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}
