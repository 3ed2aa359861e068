use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected_height}x{expected_width}, got {got_height}x{got_width}")]
    ShapeMismatch {
        expected_height: usize,
        expected_width: usize,
        got_height: usize,
        got_width: usize,
    },

    /// Exact enumeration was asked for more configurations than the cap allows.
    #[error("enumeration of {configurations} configurations exceeds the cap of {cap}")]
    Capacity { configurations: f64, cap: u64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A coordinate had zero sample standard deviation.
    #[error("degenerate scale on coordinate {coordinate}")]
    DegenerateScale { coordinate: usize },

    /// Observation channel not supported by the exact oracle.
    #[error("unsupported channel: {0}")]
    UnsupportedChannel(String),

    /// Error-contrast trait collapsed to a single class.
    #[error("degenerate trait: {0}")]
    DegenerateTrait(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
