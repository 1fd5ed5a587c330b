use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("{path}:{line}: {kind}")]
    Parse {
        path: PathBuf,
        line: usize,
        kind: ParseErrorKind,
    },

    #[error("artifact {path}: {kind}")]
    Artifact {
        path: PathBuf,
        kind: ArtifactErrorKind,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Distinct failure classes for the text dataset parsers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("file contains no samples")]
    Empty,
    #[error("row has {found} values, expected {expected}")]
    Ragged { expected: usize, found: usize },
    #[error("non-numeric field {field:?}")]
    NonNumeric { field: String },
    #[error("non-finite value {field:?}")]
    NonFinite { field: String },
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArtifactErrorKind {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported schema version {found} (reader supports {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("checksum mismatch or truncated file")]
    Checksum,
    #[error("invalid header: {0}")]
    Header(String),
    #[error("payload does not match header: {0}")]
    Payload(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("expected a {expected} artifact, found {found}")]
    WrongKind { expected: String, found: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
