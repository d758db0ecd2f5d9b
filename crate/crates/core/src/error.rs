use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A query or parameter outside its valid range.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An operation was invoked on an object that is not in the required state.
    #[error("invalid state: {0}")]
    State(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
