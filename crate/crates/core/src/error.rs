use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the morphometrics engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed RLE: {0}")]
    MalformedRle(String),

    #[error("mask file {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("mask record {index} (id {id}): {message}")]
    Validation {
        index: usize,
        id: String,
        message: String,
    },

    #[error("mask has no foreground pixels")]
    EmptyMask,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scale calibration failed: {0}")]
    Calibration(String),

    #[error("config: {0}")]
    Config(String),

    #[error("infeasible scene: {0}")]
    Infeasible(String),

    #[error("image: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
