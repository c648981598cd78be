use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A requested object is larger than the configured size budget allows.
    #[error("size budget exceeded: {what} needs {required}, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        budget: u128,
    },

    /// Dimensions of two objects do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An exact certification check was requested and did not hold.
    #[error("certification failed: {0}")]
    CertificationFailed(String),

    /// A floating-point computation produced no usable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed textual input (tensor or decomposition files).
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
