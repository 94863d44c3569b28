//! Bayesian hierarchical smoothing and registration of grouped functional
//! data.
//!
//! The library fits curves observed over a common time interval with a
//! two-level spline decomposition (a shared shape per group plus an
//! individual shape per curve) while simultaneously estimating a monotone
//! time warp for each curve. Warps carry a normalized-gamma prior that makes
//! every draw a valid warping function by construction. Posterior inference
//! runs a Gibbs sampler with closed-form conditional updates for all spline
//! coefficients and variance components and an adaptive Metropolis-Hastings
//! step for the warp latents.
//!
//! Two registration models are available behind a common interface:
//! the grouped hierarchical model and a single-shape shift/scale
//! comparison model. See [`registry`] for runtime selection by name.

pub mod baseline;
pub mod basis;
pub mod diagnostics;
pub mod error;
pub mod geweke;
pub mod harness;
pub mod io;
pub mod model;
pub mod registry;
pub mod sampler;
pub mod simulate;
pub mod stats;
pub mod warping;

pub use error::{Error, Result};
