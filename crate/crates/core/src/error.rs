use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A document or constructor argument violated a type invariant.
    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    /// A function was evaluated outside its domain (e.g. a negative allocation).
    #[error("domain error: {0}")]
    Domain(String),

    /// Bisection or the distributed algorithm failed to reach tolerance.
    #[error("solver did not converge: {message} (residual {residual:e})")]
    Solver { message: String, residual: f64 },

    /// The operation is undefined at this input (e.g. a degenerate KKT point).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A linear system was singular or produced non-finite values.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The exact oracles refuse instances beyond their size guard.
    #[error("scale guard exceeded: {0}")]
    ScaleGuard(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors that stem from bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation { .. } | Error::Parse(_) | Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
