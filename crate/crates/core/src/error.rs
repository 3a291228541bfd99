use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("group index {index} out of range for {k} groups")]
    GroupOutOfRange { index: usize, k: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("bad IDX magic number {found:#010x} (expected {expected:#010x}) in {}", .path.display())]
    BadMagic { path: PathBuf, expected: u32, found: u32 },

    #[error("truncated IDX payload in {}: expected {expected} bytes, found {found}", .path.display())]
    TruncatedPayload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("image/label count mismatch: {images} images, {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("insufficient samples for class {class}: requested {requested}, available {available}")]
    InsufficientSamples {
        class: usize,
        requested: usize,
        available: usize,
    },

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Map an `io::Error` for `path` onto `NotFound` when the file is missing.
    pub(crate) fn io_at(path: &std::path::Path, err: std::io::Error) -> Self {
        if err.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path.to_path_buf())
        } else {
            Error::Io(err)
        }
    }
}
