use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation that needs a nonzero vector got the zero vector.
    #[error("zero vector rejected: {0}")]
    ZeroVector(&'static str),

    /// A certificate failed structural validation. `path` locates the node
    /// (e.g. `root.children[2]`).
    #[error("invalid certificate: {reason} at {path}")]
    InvalidCertificate { path: String, reason: String },

    /// A sequence that must be block (strictly increasing supports) is not.
    #[error("non-block sequence: {0}")]
    NonBlock(String),

    /// A construction would exceed the declared caps of its context.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A combinatorial search hit its configured budget before finishing.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// The conforming schedule makes this construction infeasible at desk
    /// scale; the compact mode is the executable alternative.
    #[error("conforming-infeasible: {0}; use compact mode")]
    ConformingInfeasible(String),

    /// A norm query was made against a context with no members.
    #[error("empty context")]
    EmptyContext,

    /// Text input (vectors, rationals, config, registry lines) failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// A referenced record or sequence id is not registered in the context.
    #[error("unknown id: {0}")]
    UnknownId(String),

    /// A builder search finished without finding a witness.
    #[error("not found within search budget: {0}")]
    NotFound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
