use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("failed to read mesh {path}: {message}")]
    MeshFormat { path: PathBuf, message: String },

    #[error("cannot decimate to {target} faces: {reason}")]
    NonDecimatable { target: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("placement failed for object {object_id} after {attempts} attempts")]
    PlacementFailed { object_id: u32, attempts: usize },

    #[error("no support surface below object {0}")]
    NoSupportBelow(u32),

    #[error("frame gap: recording expects frame {expected}, world is at frame {actual}")]
    FrameGap { expected: u64, actual: u64 },

    #[error("unsupported session version {0:?}")]
    UnsupportedVersion(String),

    #[error("schema violation at `{path}`: {message}")]
    SchemaViolation { path: String, message: String },

    #[error("frame {frame} out of range (length {len})")]
    OutOfRange { frame: usize, len: usize },

    #[error("target object {0:?} not found")]
    TargetMissing(String),

    #[error("unknown object id {0}")]
    UnknownObject(u32),

    #[error("no category for object {0:?}")]
    MissingCategory(String),

    #[error("index mismatch: {0}")]
    IndexMismatch(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image encoding failed for {path}: {message}")]
    Image { path: PathBuf, message: String },
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments, unknown names.
    User,
    /// Malformed or inconsistent data.
    Data,
    /// Filesystem failures.
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_)
            | Error::TargetMissing(_)
            | Error::UnknownObject(_)
            | Error::MissingCategory(_) => ErrorKind::User,
            Error::Io { .. } | Error::Image { .. } => ErrorKind::Io,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::SchemaViolation {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Parses a JSON document, reporting the dotted path of the offending field.
pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let mut path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        if let Some(rest) = message.strip_prefix("missing field `") {
            if let Some(field) = rest.split('`').next() {
                path = if path == "." || path.is_empty() {
                    field.to_string()
                } else {
                    format!("{path}.{field}")
                };
            }
        }
        if path == "." {
            path = String::new();
        }
        Error::schema(path, message)
    })
}
