use thiserror::Error;

/// Errors raised by model construction, numerical routines and checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("model rejected: {0}")]
    Model(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("precision refused: {0}")]
    Precision(String),

    #[error("capacity refused: {0}")]
    Capacity(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for refusals caused by numerical precision or compute budgets.
    pub fn is_refusal(&self) -> bool {
        matches!(self, Error::Precision(_) | Error::Capacity(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
