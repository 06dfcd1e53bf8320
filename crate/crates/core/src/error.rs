use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Arguments violate an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The kept qubit set is not mapped onto itself by a permutation, so no
    /// reduced representation exists on it.
    #[error("qubit set {kept:?} is not closed under the permutation (qubit {qubit} leaves it)")]
    NotReducible { kept: Vec<usize>, qubit: usize },

    #[error("parse error at byte offset {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
