use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e}): {context}")]
    Convergence { iterations: usize, residual: f64, context: String },

    #[error("quadrature did not reach the requested accuracy (estimate {estimate:e})")]
    Accuracy { estimate: f64, value: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("ambiguous root bracket, sign changes at {roots:?}")]
    Ambiguous { roots: Vec<f64> },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// The time stepper gave up; `last_state` is the last accepted state.
    #[error("integration failed at t = {time}: {reason}")]
    Integration { reason: String, time: f64, last_state: Vec<f64> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CurvError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        CurvError::Domain(msg.into())
    }
}

impl From<std::io::Error> for CurvError {
    fn from(e: std::io::Error) -> Self {
        CurvError::Io(e.to_string())
    }
}

impl From<csv::Error> for CurvError {
    fn from(e: csv::Error) -> Self {
        CurvError::Io(e.to_string())
    }
}

pub type Result<T, E = CurvError> = std::result::Result<T, E>;
