use thiserror::Error;

/// Errors raised by the constructors and evaluators in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates a structural precondition (lengths, ranges, ordering).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A real-valued argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation needs a closed form that is not available for these parameters.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An enumeration would exceed the hard work limit.
    #[error("enumeration of {requested} points exceeds the limit of {limit}")]
    TooLarge { requested: u128, limit: u128 },

    /// A computed quantity that must be non-negative came out clearly negative.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
