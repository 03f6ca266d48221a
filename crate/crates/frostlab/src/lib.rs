//! frostlab: a desk-scale laboratory for dyadic-resolution geometric measure
//! theory on the plane.
//!
//! The crate works at a fixed dyadic resolution `δ = 2^-n` throughout: sets
//! are unions of grid squares, measures put weights on them, lines become
//! points of a dual grid and tubes become dual squares. On top of that
//! substrate it provides exact property checkers (Frostman bounds, covering
//! numbers, content), energy and Sobolev-norm numerics, a discrete X-ray
//! transform with its adjoint, and the combinatorial search routines
//! (uniformization, scale selection, pigeonhole refinement, tightness
//! detection) used to study linear accessibility of fractal sets.

use thiserror::Error;

pub mod access;
pub mod dyadic;
mod fourier;
pub mod incidence;
pub mod pipeline;
pub mod spectral;
pub mod tubes;
pub mod uniform;
pub mod xray;

#[derive(Debug, Error)]
pub enum FrostError {
    /// Input outside an operation's stated domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A stated precondition does not hold for the given data.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A constructed object failed its own certification step.
    #[error("certification failed: {0}")]
    Certification(String),
    /// A search or pigeonhole selection found no admissible candidate.
    #[error("selection failed: {0}")]
    Selection(String),
    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FrostError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(FrostError::Domain(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(FrostError::Precondition(msg.into()))
}
