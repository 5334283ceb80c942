//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no modern words passed the word-list filters (frequency > {min_freq}, dominant form < {max_dominant}); relax the thresholds or supply an explicit word list")]
    EmptyWordList { min_freq: u64, max_dominant: f64 },

    #[error("modern word {0:?} is not in the word list")]
    UnknownWord(String),

    #[error("diplomatic form {diplomatic:?} is not a recorded candidate for modern word {modern:?}; pages and word list were likely built from different corpora")]
    UnknownCandidate { modern: String, diplomatic: String },

    #[error("spacing width {width} out of range [0, {s_max}]; ingestion should have clamped it")]
    SpacingOutOfRange { width: u32, s_max: u32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no pages supplied")]
    NoPages,

    #[error("attributions share no page ids")]
    DisjointAttributions,

    #[error("all {restarts} training restarts failed; first failure: {reason}")]
    AllRestartsFailed { restarts: usize, reason: String },

    #[error("non-finite {quantity} encountered during scoring")]
    NonFinite { quantity: &'static str },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(path: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }
}
