use thiserror::Error;

/// Errors for every fallible operation in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An argument violates a documented precondition (empty input,
    /// non-positive bandwidth, non-finite values, ...).
    #[error("invalid argument: {0}")]
    Validation(String),

    /// A cache or state object was used against parameters it was not
    /// produced from.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A file did not match its declared on-disk layout.
    #[error("format error: {0}")]
    Format(String),

    /// A configuration key or value could not be interpreted.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
