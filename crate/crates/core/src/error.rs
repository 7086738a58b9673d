use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty lake: no readable tables under {0}")]
    EmptyLake(PathBuf),

    #[error("table {0} has no header row")]
    NoHeader(String),

    #[error("csv error in {path}: {message}")]
    Csv { path: String, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),

    #[error("corrupt index container {path}: {message}")]
    Container { path: String, message: String },

    #[error("embedding model: {0}")]
    Embedding(String),

    #[error("target {0} has not been profiled")]
    Unprofiled(String),

    #[error("all evidence weights are zero")]
    ZeroWeights,

    #[error("target {0} is not covered by the ground truth")]
    UnknownTarget(String),

    #[error("ground truth: {0}")]
    Truth(String),

    #[error("training set: {0}")]
    Training(String),

    #[error("benchmark: {0}")]
    Benchmark(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
