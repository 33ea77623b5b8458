//! Monte Carlo estimators for `P_{s,t} f`, its gradient and the weighted
//! transport pairings.

mod ensemble;
mod estimators;
mod weights;

pub use ensemble::{run_ensemble, Ensemble, McConfig, BLOCK, MIN_PATHS};
pub use estimators::{
    estimate_grad_bismut, estimate_grad_fd, estimate_ptf, estimate_weighted_norm,
    estimate_weighted_pairing, McEstimate, PairingInner,
};
pub(crate) use estimators::start;
pub use weights::{phi, Functional, ScalarField, WeightAccumulator, WeightSpec};
