use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid type: {0}")]
    Type(String),

    #[error("composition error: {0}")]
    Composition(String),

    #[error("typing error on wire {wire}: {left} does not match {right}")]
    Typing { wire: String, left: String, right: String },

    #[error("ill-formed diagram: {0}")]
    Diagram(String),

    #[error("out-of-vocabulary token `{0}`")]
    Oov(String),

    #[error("parse error at token {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("index {index} out of range for {len} {what}")]
    Index { what: &'static str, index: usize, len: usize },

    #[error("capacity exceeded: {what} needs {needed}, cap is {cap}")]
    Capacity { what: &'static str, needed: usize, cap: usize },

    #[error("invalid circuit: {0}")]
    Circuit(String),

    #[error("no value for parameter `{0}`")]
    MissingSymbol(String),

    #[error("{context}: {source}")]
    Batch { context: String, source: Box<Error> },

    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("invalid template: {0}")]
    Template(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    NonFinite { epoch: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn with_context(self, context: impl Into<String>) -> Error {
        Error::Batch { context: context.into(), source: Box::new(self) }
    }
}
