use std::io;

use thiserror::Error;

use crate::types::{ItemId, UserId};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty evaluation")]
    EmptyEvaluation,

    #[error("non-finite prediction")]
    NonFinitePrediction,

    #[error("invalid rating scale: {0}")]
    InvalidScale(String),

    #[error("rating {value} outside scale [{min}, {max}]")]
    RatingOutOfScale { value: f64, min: f64, max: f64 },

    #[error("unknown user {0}")]
    UnknownUser(UserId),

    #[error("user {user} has no rating for item {item}")]
    MissingRating { user: UserId, item: ItemId },

    #[error("duplicate rating: user {user} already rated item {item}")]
    DuplicateRating { user: UserId, item: ItemId },

    #[error("model component `{0}` is not available")]
    MissingComponent(&'static str),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient ratings: need at least {required}, corpus has {available}")]
    InsufficientRatings { required: usize, available: usize },

    #[error("empty test set")]
    EmptyTestSet,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported model file version {found} (expected {expected})")]
    ModelVersion { found: String, expected: u32 },

    #[error("truncated model file: {0}")]
    ModelTruncated(String),

    #[error("model checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    ModelChecksum { stored: u32, computed: u32 },

    #[error("malformed model file at line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for errors caused by the input data rather than by misuse of the API.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::RatingOutOfScale { .. }
                | Error::InsufficientRatings { .. }
                | Error::EmptyTestSet
                | Error::Parse { .. }
                | Error::ModelVersion { .. }
                | Error::ModelTruncated(_)
                | Error::ModelChecksum { .. }
                | Error::ModelFormat { .. }
                | Error::Io(_)
        )
    }
}
