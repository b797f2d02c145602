use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-side precondition was not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A key was inserted into a reservoir or merge that already holds it.
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),

    /// Malformed serialized sample. `position` is a byte offset for the binary
    /// format and a 1-based line number for the text format.
    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },

    /// An internal consistency check failed.
    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(position: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            position,
            message: message.into(),
        }
    }
}

pub(crate) fn check_weight(weight: f64) -> Result<()> {
    if weight.is_finite() && weight > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "weight must be positive and finite, got {weight}"
        )))
    }
}
