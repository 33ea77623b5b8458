//! Discretised frame-bundle diffusions, local time and damped transport.

pub mod dump;
mod evolving;
mod path;
mod stepper;

pub use evolving::{EvolvingMetric, ScaleFamily};
pub use path::{evolve_q, simulate_path, simulate_path_from, simulate_reflected_path, PathSample};
pub use stepper::{
    boundary_factor, ConstantCurvature, CurvatureOracle, Diffusion, ModelCurvature, StepRecord,
    Walker, DEFAULT_GUARD,
};
