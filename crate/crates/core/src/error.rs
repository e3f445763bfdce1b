use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error("index {index} out of range (size {size})")]
    OutOfRange { index: u64, size: u64 },

    #[error("attribute index {index} out of range for class {class}")]
    BadAttribute { class: &'static str, index: usize },

    #[error("record {0:?} not found")]
    UnknownRecord(String),

    #[error("record {0:?} already written")]
    DuplicateRecord(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::Corrupt(msg.into())
    }
}
