use std::io;

use thiserror::Error;

/// Errors shared across the crate. Variants carry enough context to be
/// actionable without a backtrace.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),

    #[error("empty raster: width and height must be nonzero")]
    EmptyRaster,

    #[error("buffer length {got} does not match {expected} for {width}x{height}")]
    BufferLength {
        width: u32,
        height: u32,
        expected: usize,
        got: usize,
    },

    #[error("histogram has no counts")]
    EmptyHistogram,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sequence has {got} frames, need at least {need}")]
    SequenceTooShort { got: usize, need: usize },

    #[error("no jaw motion detected between the open and closed frames")]
    NoJawMotion,

    #[error("backward flow required for {0} fusion")]
    MissingBackwardFlow(&'static str),

    #[error("occluder placement failed after {0} attempts")]
    PlacementFailed(u32),

    #[error("pose {0} projects outside the image")]
    PoseOutsideFrame(usize),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
