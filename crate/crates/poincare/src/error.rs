use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("ill-conditioned design: {0}")]
    IllConditionedDesign(String),
    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("optimization failed: {0}")]
    Optimization(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
