//! Monte Carlo laboratory for pinched Bakry–Émery curvature.
//!
//! Brownian motion with drift is simulated on a small catalog of model
//! spaces together with its orthonormal frame, local time on the boundary
//! and the damped transport `Q`. On top of that sit estimators for the
//! semigroup and its gradient, the gradient/Poincaré/log-Sobolev
//! inequalities that characterise two-sided curvature bounds, and small-time
//! recovery of `Ric^Z`, of the second fundamental form and of the evolving
//! curvature `Ric_t − ∇Z − ½∂_t g`.

pub mod cli_report;
pub mod error;
pub mod frame_sde;
pub mod geometry;
pub mod inequalities;
pub mod linalg;
pub mod recovery;
pub mod rng;
pub mod semigroup;
pub mod stats;

pub use error::{Error, Result};
