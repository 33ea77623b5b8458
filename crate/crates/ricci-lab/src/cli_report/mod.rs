//! Experiment configuration, orchestration and result files.
//!
//! A run validates its [`ExperimentConfig`] before doing anything, computes
//! the selected inequality reports and recoveries, then writes JSON, CSV and
//! SVG outputs plus a `manifest.json` holding the config hash, timings and
//! per-report exclusion logs.

mod config;
mod emit;
mod run;
mod svg;

pub use config::{
    fnv1a64, BoundsSpec, ExperimentConfig, Format, ManifoldSpec, McSpec, OutputSpec, RecoveryKind,
    RecoverySpec, InequalitySpec, TestFunctionKind, TestFunctionSpec,
};
pub use emit::{emit_report, slug, RecoveryOutput, QUOTIENT_CSV_HEADER};
pub use run::{
    compute, error_status, run_experiment, ExclusionLog, FileEntry, Mode, RunManifest, RunOptions,
    RunOutput, DEFAULT_OUT_DIR, EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, EXIT_VIOLATED, TOOL_VERSION,
};
pub use svg::{Chart, Series};
