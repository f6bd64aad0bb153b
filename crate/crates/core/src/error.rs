//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// The parameters are in the wrong regime (sub/supercritical) for the operation.
    #[error("regime error: {0}")]
    Regime(String),
    /// The ODE integrator failed (step-size underflow, collision guard, step budget).
    #[error("integration failure: {0}")]
    Integration(String),
    /// An event or section crossing was not found within the allotted horizon.
    #[error("event not found: {0}")]
    EventNotFound(String),
    /// A root could not be bracketed or a Newton iteration did not converge.
    #[error("root finding failed: {0}")]
    Root(String),
    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    /// A pole of a rational expression was hit.
    #[error("pole: {0}")]
    Pole(String),
    /// Parsing of an embedded data file failed.
    #[error("parse error: {0}")]
    Parse(String),
}

/// Convenience alias.
pub type Result<T> = std::result::Result<T, Error>;
