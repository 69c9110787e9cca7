use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error in {op}: {lhs:?} vs {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("bounds error in {op}: {detail}")]
    Bounds { op: &'static str, detail: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("data error in {id}: {msg}")]
    Data { id: String, msg: String },

    #[error("unsupported question {id}: {msg}")]
    Unsupported { id: String, msg: String },

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("model kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("non-finite gradient in parameter {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Self {
        Error::Dimension {
            op,
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn data(id: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Data {
            id: id.into(),
            msg: msg.into(),
        }
    }
}
