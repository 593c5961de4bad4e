use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}: {text:?}")]
    Parse {
        line: usize,
        text: String,
        message: String,
    },

    #[error("invalid rule {text:?}: {message}")]
    Rule { text: String, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("lexical association model was fit on an empty corpus")]
    EmptyModel,

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, text: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            text: text.into(),
            message: message.into(),
        }
    }
}
