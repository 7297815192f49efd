use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Failure while reading or writing one of the on-disk formats.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{0}")]
    Stream(#[from] io::Error),

    #[error("bad magic: expected `DMAT <rows> <cols>` header, found {found:?}")]
    BadMagic { found: String },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("{extra} unexpected bytes after the matrix payload")]
    TrailingData { extra: usize },

    #[error("non-finite value {value} at row {row}, column {col}")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("line {line}: unknown tag `{name}`")]
    UnknownTag { line: usize, name: String },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] protoclust::Error),
}

impl FormatError {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> u8 {
        match self {
            FormatError::Io { .. } | FormatError::Stream(_) => 3,
            FormatError::BadMagic { .. } => 4,
            FormatError::Truncated { .. } | FormatError::TrailingData { .. } => 5,
            FormatError::NonFinite { .. } => 6,
            FormatError::UnknownTag { .. } | FormatError::Syntax { .. } => 7,
            FormatError::Config(_) => 8,
            FormatError::Model(_) => 9,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> FormatError {
        let path = path.into();
        move |source| FormatError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, FormatError>;
