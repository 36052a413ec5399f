use std::fmt;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller violated a documented precondition.
    #[error("usage error: {0}")]
    Usage(String),
    #[error("parse error (line {line}): {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    /// Exhaustive enumeration would exceed the configured budget.
    #[error("enumeration needs {needed} evaluations, cap is {cap}")]
    CapExceeded { needed: u128, cap: u128 },
    #[error("solver failure: {0}")]
    Solver(String),
    /// External solver invocation or output problems.
    #[error("adapter error: {0}")]
    Adapter(String),
    /// A candidate solution failed re-verification against its model.
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("internal consistency error: {0}")]
    Consistency(String),
    #[error("plot error: {0}")]
    Plot(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn usage(msg: impl fmt::Display) -> Self {
        Error::Usage(msg.to_string())
    }

    pub(crate) fn parse(line: usize, msg: impl fmt::Display) -> Self {
        Error::Parse {
            line,
            msg: msg.to_string(),
        }
    }
}
