use std::path::PathBuf;

use thiserror::Error;

/// Coarse grouping used by callers (the CLI maps these to exit codes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad configuration, schema, or parameter.
    Config,
    /// Bad or inconsistent data.
    Data,
    /// Daily API quota exhausted.
    Quota,
    /// Network or remote-service failure.
    Network,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("record {row} has no {task} label")]
    MissingLabel { row: usize, task: &'static str },

    #[error("record {row} normalizes to invalid name {name:?}")]
    InvalidName { row: usize, name: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("corpus contains only one label; both classes are required")]
    SingleLabelCorpus,

    #[error("row {row}: unknown label value {value:?}")]
    UnknownLabel { row: usize, value: String },

    #[error("task mismatch: model is {model}, data is {data}")]
    TaskMismatch { model: &'static str, data: &'static str },

    #[error("no prediction names match the gold set")]
    EmptyIntersection,

    #[error("{malformed} of {total} rows malformed, above the abort threshold")]
    TooManyMalformed { malformed: usize, total: usize },

    #[error("model artifact is corrupt: {0}")]
    CorruptArtifact(String),

    #[error("model artifact version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("daily quota exhausted: {used} of {quota} live calls used")]
    QuotaExhausted { used: u32, quota: u32 },

    #[error("network error: {0}")]
    Network(String),

    #[error("unparseable service payload: {0}")]
    Payload(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::InvalidParam(_) => ErrorCategory::Config,
            Error::QuotaExhausted { .. } => ErrorCategory::Quota,
            Error::Network(_) | Error::Payload(_) => ErrorCategory::Network,
            _ => ErrorCategory::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
