use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("arena capacity exceeded: need {needed} bits, {available} available")]
    Capacity { needed: usize, available: usize },
    #[error("index {index} out of bounds for length {len}")]
    Bounds { index: usize, len: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("work budget exhausted")]
    BudgetExhausted,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
