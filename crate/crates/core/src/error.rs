//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by geometry, sampling, quadrature and the higher-level
/// solver/diagnostic routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A constructor or operation received a parameter outside its admissible
    /// range (non-positive radius, angle outside the wedge, bad grid, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The point lies outside the open wedge.
    #[error("point (x1 = {x1}, x2 = {x2}) is not an interior point of the wedge")]
    OutsideDomain { x1: f64, x2: f64 },

    /// The operation needs a strictly interior point but the argument is on (or
    /// numerically indistinguishable from) the boundary.
    #[error("point is within {dist:e} of the boundary; evaluation refused (threshold {threshold:e})")]
    NearBoundary { dist: f64, threshold: f64 },

    /// A boundary operation received a point that does not lie on either arm.
    #[error("point (x1 = {x1}, x2 = {x2}) is not on the boundary")]
    NotOnBoundary { x1: f64, x2: f64 },

    /// Adaptive quadrature hit its subdivision limit before reaching the
    /// requested tolerance. The best estimate and its error bound are attached.
    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound:e}")]
    QuadratureNonConvergence { estimate: f64, error_bound: f64 },

    /// A walk exceeded the step limit before reaching the absorbing shell.
    #[error("walk censored after {steps} steps without absorption")]
    Censored { steps: u64 },

    /// Not enough samples to run a statistical procedure.
    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    /// Name not present in the boundary-data catalog.
    #[error("unknown boundary function {0:?} (expected gaussian | odd_gaussian | bump | zero)")]
    UnknownBoundaryFunction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
