use thiserror::Error;

/// Errors raised by metric computations, estimators and models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A precondition of an operation was not met by its inputs.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The model cannot perform the requested operation (e.g. no gradient).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A rank correlation was requested on a constant vector.
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    /// An external model broke the line protocol, timed out or exited.
    #[error("model protocol error: {0}")]
    ModelProtocol(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::Contract(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
