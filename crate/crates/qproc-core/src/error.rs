//! Error taxonomy shared by every engine in the crate.
//!
//! Variants map one-to-one onto the failure classes surfaced to callers:
//! bad arguments, ill-defined models, rate overflow, resource limits,
//! non-finite user functions, and violated operation preconditions.

use alloc::string::String;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Failure classes for model construction and analysis.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Arguments outside an operation's domain (bad caps, λ ≤ 0, empty schedules).
    #[error("usage error: {0}")]
    Usage(String),
    /// The model itself is ill-defined (negative rate, self loop, broken invariant).
    #[error("model definition error: {0}")]
    ModelDefinition(String),
    /// A rate evaluated to a non-finite value; the model is valid only below
    /// this point of its state space.
    #[error("rate overflow: {0}")]
    RateOverflow(String),
    /// A window, shell, or coordinate exceeded a configured resource limit.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// A user-supplied function produced a non-finite value.
    #[error("evaluation error: {0}")]
    Evaluation(String),
    /// An operation precondition does not hold (certificate shape, sign conditions).
    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    /// True for errors raised while racing along a path whose rates left the
    /// representable range, which the simulator converts into a capped path.
    pub fn is_representability(&self) -> bool {
        matches!(self, Error::RateOverflow(_) | Error::Resource(_))
    }
}
