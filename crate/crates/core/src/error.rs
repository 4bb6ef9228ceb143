use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid task space: {0}")]
    InvalidSpace(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot fit {k} components on {points} points")]
    TooFewPoints { points: usize, k: usize },

    #[error("mixture has no components")]
    EmptyMixture,

    #[error("curriculum has no snapshots left after filtering")]
    EmptyCurriculum,

    #[error("teacher contract violated: {0}")]
    Contract(String),

    #[error("task {0:?} lies outside the task space")]
    OutOfBounds(Vec<f64>),

    #[error("trace format error: {0}")]
    TraceFormat(String),

    #[error("trace version {found} is not supported (expected {expected})")]
    TraceVersion { found: u32, expected: u32 },

    #[error("trace checksum mismatch: stored {stored}, computed {computed}")]
    Checksum { stored: String, computed: String },

    #[error("student protocol error on line {line:?}: {message}")]
    Protocol { line: String, message: String },

    #[error("student process timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("student process exited: {0}")]
    ProcessExited(String),

    #[error("degenerate samples: {0}")]
    DegenerateSample(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
