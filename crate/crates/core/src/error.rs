//! Error type shared by every module in the crate.

/// Crate-wide error type.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A protocol or session configuration is internally inconsistent.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A computed quantity left the numerically admissible range; this
    /// signals a simulator bug, never a property of the attack under study.
    #[error("numerical integrity violation: {0}")]
    NumericalIntegrity(String),

    /// Strict syndrome decoding hit a syndrome outside the code's
    /// guaranteed correction radius.
    #[error("decode failure: {0}")]
    DecodeFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::NumericalIntegrity(msg.into())
    }
}
