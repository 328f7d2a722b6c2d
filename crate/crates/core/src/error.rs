use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("coordinate {coordinate} out of range for dimension {dim}")]
    CoordinateOutOfRange { coordinate: usize, dim: usize },

    #[error("operation requires a non-empty bucket")]
    EmptyBucket,

    #[error("point {point_id} is not a member of the bucket")]
    PointNotInBucket { point_id: u32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bucket has fewer than two points; no optimization needed")]
    BucketTooSmall,

    #[error("no coordinates left to hash on")]
    ExhaustedCoordinates,

    #[error("transcript is empty")]
    EmptyTranscript,

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("unsupported format version {actual} (expected {expected})")]
    VersionMismatch { expected: u32, actual: u32 },

    #[error("dataset fingerprint does not match the one the index was built from")]
    FingerprintMismatch,

    #[error("forest was built without internal-node buckets; pivot sampling unavailable")]
    PivotsUnavailable,

    #[error("grid shape {rows}x{cols} does not cover {len} values")]
    GridShapeMismatch { rows: usize, cols: usize, len: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Coarse category used by the CLI for exit messages.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. }
            | Error::CoordinateOutOfRange { .. }
            | Error::EmptyBucket
            | Error::PointNotInBucket { .. }
            | Error::EmptyTranscript
            | Error::FingerprintMismatch
            | Error::GridShapeMismatch { .. } => "input",
            Error::InvalidConfig(_) | Error::BucketTooSmall | Error::ExhaustedCoordinates => {
                "config"
            }
            Error::Parse { .. } | Error::VersionMismatch { .. } => "parse",
            Error::PivotsUnavailable => "query",
            Error::Io(_) => "io",
        }
    }
}
