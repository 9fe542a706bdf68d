use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("archive is empty")]
    EmptyArchive,
    #[error("replay buffer is empty")]
    EmptyBuffer,
    #[error("fitness {0} is not finite")]
    NonFiniteFitness(f64),
    #[error("episode already finished after {0} steps")]
    EpisodeFinished(usize),
    #[error("episode incomplete: {done} of {total} steps taken")]
    EpisodeIncomplete { done: usize, total: usize },
    #[error("{0} requires a descriptor-conditioned actor")]
    NotConditioned(&'static str),
    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }
}
