use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller broke an operation's precondition (length mismatch, empty input, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Instance data could not be parsed or failed validation.
    #[error("parse error at token {position}: {message}")]
    Parse { position: usize, message: String },

    /// Schema problem in a structured instance document.
    #[error("invalid instance document: key `{key}`: {message}")]
    Schema { key: String, message: String },

    /// Invalid solver or experiment configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input is well-formed but statistically degenerate (e.g. constant regressor).
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
