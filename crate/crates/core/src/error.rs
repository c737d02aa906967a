use thiserror::Error;

/// Errors produced by predictors, decoders, file formats, and the runner.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation was called outside its contract (e.g. before `initialize`).
    #[error("usage: {0}")]
    Usage(String),

    /// `set_state` received a state captured from a different predictor type.
    #[error("state mismatch: expected a {expected} state")]
    StateMismatch { expected: &'static str },

    /// The hypothesis has no scorable continuation.
    #[error("dead hypothesis: no scorable continuation")]
    DeadHypothesis,

    /// A tokenization transducer admits more than one expansion for a token.
    #[error("ambiguous tokenization: {0}")]
    Ambiguous(String),

    /// Invalid configuration (unknown names, bad parameters, missing resources).
    #[error("configuration: {0}")]
    Config(String),

    /// Malformed input text at a specific line.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Structurally well-formed input that violates a documented constraint.
    #[error("validation: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
