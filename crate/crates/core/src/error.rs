use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("ensemble member {member} failed: {source}")]
    Member {
        member: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("dataset has a single class")]
    SingleClass,

    #[error("too few rows: need at least {needed}, got {found}")]
    TooSmall { needed: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("selection weights sum to zero")]
    DegenerateSelection,

    #[error("unsupported task: {0}")]
    UnsupportedTask(String),

    #[error("model has not been calibrated")]
    Uncalibrated,

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
