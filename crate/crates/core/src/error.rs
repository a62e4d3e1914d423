use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of a radar equation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested angle lies outside the array's visible region.
    #[error("outside visible region: {0}")]
    OutsideVisibleRegion(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The pipeline found nothing to localize in this frame.
    #[error("no target found")]
    NoTarget,

    #[error("angle undefined for an all-zero snapshot")]
    UndefinedAngle,

    #[error("parse error at byte offset {offset}: {message}")]
    Parse { offset: u64, message: String },

    /// A frame cut short. `offset` is where the frame starts.
    #[error("truncated capture: frame {frame} at byte offset {offset} needs {expected} bytes, found {actual}")]
    Truncated { frame: usize, offset: u64, expected: u64, actual: u64 },

    #[error("{path}:{line}: {message}")]
    Text { path: String, line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
