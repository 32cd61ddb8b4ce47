use alloc::string::String;

use crate::wire::WireError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure reported by a fallible user function.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct UdfError(pub String);

impl UdfError {
    pub fn new(message: impl Into<String>) -> Self {
        UdfError(message.into())
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    /// A user function failed; `key` is the debug rendering of the record
    /// being processed.
    #[error("user function failed on key {key}: {source}")]
    Udf { key: String, source: UdfError },

    #[error("corrupt shuffle block: {0}")]
    Corrupt(#[from] WireError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid partition construction: {0}")]
    Construction(String),

    /// Raised in verification mode when a triplet function reads a vertex
    /// attribute its access spec did not declare.
    #[error("triplet function read the undeclared {side} attribute")]
    UndeclaredAccess { side: &'static str },
}

impl Error {
    pub(crate) fn udf(key: &impl core::fmt::Debug, source: UdfError) -> Self {
        Error::Udf {
            key: alloc::format!("{key:?}"),
            source,
        }
    }
}
