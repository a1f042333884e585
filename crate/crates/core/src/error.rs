use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid instance entries at {offending:?}")]
    Validation { offending: Vec<(usize, usize)> },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("gradient is zero: iterate is already stationary")]
    Stationary,

    #[error("line search did not converge; last interval [{lo}, {hi}]")]
    Convergence { lo: f64, hi: f64 },

    #[error("infimum not attained along ray")]
    Unattained,

    #[error("linear program error: {0}")]
    Lp(String),

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
