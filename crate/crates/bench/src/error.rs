use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("no results in {0}")]
    NoData(PathBuf),
    #[error(transparent)]
    Core(#[from] abstain::Error),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
