use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the engine. Each variant belongs to one [`ErrorKind`],
/// which front ends use to pick exit codes and HTTP statuses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("schema error: missing required column `{column}`")]
    Schema { column: String },

    #[error("duplicate meme id `{0}`")]
    DuplicateId(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("data error at row {row}: {message}")]
    Data { row: usize, message: String },

    #[error("degenerate vector at row {row} (`{id}`): all components are zero")]
    DegenerateVector { row: usize, id: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("index {index} out of range for {len} items")]
    Index { index: usize, len: usize },

    #[error("partition violation: {0}")]
    PartitionViolation(String),

    #[error("unknown emotion label `{0}`")]
    Label(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown id `{0}`")]
    Lookup(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty text")]
    EmptyText,
}

/// Coarse error categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Io,
    Input,
    Alignment,
    Data,
    Config,
    Conflict,
    Empty,
    Lookup,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, err: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            message: err.to_string(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io { .. } => ErrorKind::Io,
            Csv { .. } | Schema { .. } | Format(_) | Parse { .. } | Label(_) => ErrorKind::Input,
            DuplicateId(_) | Conflict(_) => ErrorKind::Conflict,
            Alignment(_) | Dimension { .. } => ErrorKind::Alignment,
            Data { .. }
            | DegenerateVector { .. }
            | Degenerate(_)
            | Consistency(_)
            | PartitionViolation(_)
            | EmptyText => ErrorKind::Data,
            Config(_) | Precondition(_) => ErrorKind::Config,
            EmptyInput(_) => ErrorKind::Empty,
            Index { .. } | Lookup(_) => ErrorKind::Lookup,
        }
    }
}
