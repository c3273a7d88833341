use thiserror::Error;

/// Unified error type for the crate.
#[derive(Debug, Error)]
pub enum QhmError {
    /// Parameter set rejected at construction time.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Truncation rejected at construction time.
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    /// Two operands carry incompatible parameters or truncations.
    #[error("operand mismatch: {0}")]
    Mismatch(String),

    /// A precondition on an operation's inputs failed.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Serialized stream declares an unknown format version.
    #[error("unsupported format version: {0}")]
    VersionMismatch(String),

    /// Serialized header is malformed.
    #[error("corrupt header: {0}")]
    CorruptHeader(String),

    /// Serialized payload is truncated or has trailing garbage.
    #[error("corrupt stream: {0}")]
    CorruptStream(String),

    /// Declared band sizes disagree with the payload length.
    #[error("band mismatch: {0}")]
    BandMismatch(String),

    /// Configuration file or override rejected.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QhmError>;
