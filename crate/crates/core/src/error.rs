use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {lhs} vs {rhs}")]
    Dimension {
        op: &'static str,
        lhs: String,
        rhs: String,
    },

    #[error("layer {layer}: expected weight shape {expected:?}, got {actual:?}")]
    WeightShape {
        layer: usize,
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("layer {layer}: {msg}")]
    Layer { layer: usize, msg: String },

    #[error("invalid architecture: {0}")]
    Architecture(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("data error at row {row}: {msg}")]
    Data { row: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
