use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("empty mask")]
    EmptyMask,
    #[error("region of interest has no pixels set")]
    EmptyRoi,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("RLE counts sum to {sum}, expected {expected}")]
    RleLength { sum: u64, expected: u64 },
    #[error("timestamps must be strictly increasing (index {index})")]
    NonMonotoneTimestamps { index: usize },
    #[error("image width {width} is narrower than block size {block} + max disparity {max_disparity}")]
    ImageTooNarrow {
        width: usize,
        block: usize,
        max_disparity: usize,
    },
    #[error("animal {index} is behind the camera (z = {z})")]
    BehindCamera { index: usize, z: f64 },
    #[error("instance {instance} has inconsistent class pixels")]
    InconsistentInstance { instance: u16 },
    #[error("depth input required when depth fusion is enabled")]
    MissingDepth,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("unknown class id {0}")]
    UnknownClass(u16),
    #[error("class sets differ between reports")]
    MismatchedClasses,
    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}
