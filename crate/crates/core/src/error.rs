use alloc::string::String;

/// Errors raised by the statistical core.
///
/// Variants fall into two families that callers usually map to different
/// exit statuses: input/validation problems (`Parameter`, `NonFinite`,
/// `Tie`, `Domain`) and numerical limits (`Capacity`, `Precision`).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("sample {index} is not finite")]
    NonFinite { index: usize },

    #[error("tie inside the window starting at position {window}")]
    Tie { window: usize },

    #[error("bin {bin} has zero probability; {context} needs strictly positive probabilities")]
    Domain { bin: usize, context: &'static str },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("precision failure at {bits} bits: {detail}")]
    Precision { bits: usize, detail: String },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for errors caused by numerical capacity or precision limits.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Capacity(_) | Error::Precision { .. })
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
