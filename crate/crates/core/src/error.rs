use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path} at byte {offset}: {message}")]
    Parse {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("{path}:{line}: {message}")]
    Line {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("join error for question_id {question_id}: {reason}")]
    Join { question_id: u64, reason: String },

    #[error("duplicate question id {0}")]
    DuplicateId(u64),

    #[error("invalid record {question_id}: {reason}")]
    InvalidRecord { question_id: u64, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown preset {name:?}; available presets: {}", available.join(", "))]
    UnknownPreset {
        name: String,
        available: Vec<&'static str>,
    },

    #[error("sample size {requested} exceeds corpus size {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("cannot fit a prior on an empty training corpus")]
    EmptyTrain,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by bad user input rather than bad data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::UnknownPreset { .. })
    }
}
