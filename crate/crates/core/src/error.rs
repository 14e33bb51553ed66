use thiserror::Error;

/// Errors raised by the hypomix library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("size cap exceeded: {what} = {value} (limit {limit})")]
    SizeCap {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("GNS frame error: {reason} (smallest eigenvalue {smallest_eigenvalue:e})")]
    Frame {
        reason: String,
        smallest_eigenvalue: f64,
    },

    #[error("frame mismatch: operands live in different coordinate systems")]
    FrameMismatch,

    #[error("linear-map contract violated: {0}")]
    Contract(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("numeric failure: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("mixing threshold not reached within the time grid (last distance {last_distance:e} at t = {last_time})")]
    Horizon { last_time: f64, last_distance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
