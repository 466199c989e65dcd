use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite state component {value} at position {position}")]
    NonFinite { position: usize, value: f64 },

    #[error("index {index} out of range for pool of {len}")]
    Index { index: usize, len: usize },

    #[error("action {action} out of range (action count {count})")]
    Action { action: usize, count: usize },

    #[error("empty experience pool")]
    EmptyPool,

    #[error("empty sequence")]
    Empty,

    #[error("length mismatch: {left} vs {right}")]
    Length { left: usize, right: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unsupported state dimension {0}")]
    UnsupportedDimension(usize),

    #[error("size limit exceeded: {size} > {cap}")]
    Size { size: usize, cap: usize },

    #[error("unknown name: {0}")]
    Name(String),

    #[error("training diverged: {0}")]
    Training(String),

    #[error("external teacher: {0}")]
    ExternalTeacher(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
