//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by the laboratory's operations.
///
/// Variants mirror the failure classes of the public operations; each carries a
/// human-readable diagnostic.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A query exceeds the data retained by a truncated object.
    #[error("out of range: {0}")]
    OutOfRange(String),
    /// A constructed object would violate its invariants.
    #[error("construction failure: {0}")]
    ConstructionFailure(String),
    /// A function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A flow trajectory left its validity window.
    #[error("out of window: {0}")]
    OutOfWindow(String),
    /// A ratio with vanishing denominator was requested.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),
    /// The level-set norm of a field vanishes at the named radius.
    #[error("degenerate level set at rho = {rho}")]
    DegenerateLevel {
        /// Radius at which the level-set norm vanished.
        rho: f64,
    },
    /// A linear or differential solver failed.
    #[error("solver failure: {0}")]
    SolverFailure(String),
    /// A sequence expected to converge did not.
    #[error("no limit: {0}")]
    NoLimit(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
