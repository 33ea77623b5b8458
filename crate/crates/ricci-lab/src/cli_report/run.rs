use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::{point_vector, ExperimentConfig, RecoveryKind};
use super::emit::{emit_report, RecoveryOutput};
use crate::error::{Error, Result};
use crate::frame_sde::EvolvingMetric;
use crate::inequalities::{eval_families, InequalityReport, Problem, Verdict};
use crate::recovery::{
    pinch_scan, recover_evolving, recover_ii, recover_ricci, BoundaryMethod, RicciMethod, ScanRow,
    DEFAULT_BOUNDARY_T_GRID, DEFAULT_T_GRID,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_OUT_DIR: &str = "ricci-lab-out";

/// Exit statuses of a run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

/// What a CLI subcommand runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Everything the config selects.
    Verify,
    /// Only the recovery block.
    Recover,
    /// The inequality families on an evolving metric.
    FlowCert,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub jobs: usize,
    /// Overrides `output.dir`.
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    /// `reports_json`, `reports_csv`, `recovery_json`, `recovery_csv`, `svg`.
    pub kind: String,
}

/// Per-report path exclusion and weight-moment log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusionLog {
    pub id: String,
    pub exclusion_fraction: f64,
    #[serde(with = "crate::inequalities::nullable")]
    pub moment: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub mode: Mode,
    pub config_hash: String,
    pub tool_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub files: Vec<FileEntry>,
    pub exclusion: Vec<ExclusionLog>,
    pub n_reports: usize,
    pub n_violated: usize,
    pub n_inconclusive: usize,
    pub n_low_confidence: usize,
    pub exit_status: i32,
}

impl RunManifest {
    /// Checks that every listed file exists and parses as its kind.
    pub fn verify_files(&self, dir: &Path) -> Result<()> {
        for f in &self.files {
            let text = std::fs::read_to_string(dir.join(&f.path))?;
            let ok = match f.kind.as_str() {
                "reports_json" => crate::inequalities::read_reports(&text).is_ok(),
                "recovery_json" => serde_json::from_str::<RecoveryOutput>(&text).is_ok(),
                "reports_csv" | "recovery_csv" => {
                    let mut r = csv::Reader::from_reader(text.as_bytes());
                    r.records().all(|rec| rec.is_ok())
                }
                "svg" => text.starts_with("<?xml") && text.trim_end().ends_with("</svg>"),
                _ => false,
            };
            if !ok {
                return Err(Error::Decode(format!("{} does not parse as {}", f.path, f.kind)));
            }
        }
        Ok(())
    }
}

/// Reports and recoveries of one run, before anything is written.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub reports: Vec<InequalityReport>,
    pub recovery: Option<RecoveryOutput>,
}

impl RunOutput {
    pub fn n_violated(&self) -> usize {
        self.reports.iter().filter(|r| r.verdict == Verdict::Violated).count()
    }

    pub fn n_inconclusive(&self) -> usize {
        self.reports.iter().filter(|r| r.verdict == Verdict::Inconclusive).count()
    }

    pub fn n_low_confidence(&self) -> usize {
        self.recovery.as_ref().map_or(0, |r| r.rows.iter().filter(|row| row.estimate.low_confidence).count())
    }

    /// 0 iff no report is violated, 2 otherwise.
    pub fn exit_status(&self) -> i32 {
        if self.n_violated() > 0 {
            EXIT_VIOLATED
        } else {
            EXIT_OK
        }
    }
}

/// Exit status for an error raised by a run.
pub fn error_status(e: &Error) -> i32 {
    match e {
        Error::ConfigInvalid(_) => EXIT_INVALID,
        _ => EXIT_RUNTIME,
    }
}

fn check_mode(config: &ExperimentConfig, mode: Mode) -> Result<()> {
    let bad = |m: &str| Err(Error::ConfigInvalid(m.into()));
    match mode {
        Mode::Verify if config.inequalities.is_none() && config.recovery.is_none() => {
            bad("config selects neither inequalities nor a recovery")
        }
        Mode::Recover if config.recovery.is_none() => bad("recover needs a `recovery` block"),
        Mode::FlowCert if config.evolving.is_none() => bad("flowcert needs an `evolving` metric"),
        Mode::FlowCert if config.inequalities.is_none() => bad("flowcert needs an `inequalities` block"),
        _ => Ok(()),
    }
}

/// Runs the computations the mode selects without touching the filesystem.
pub fn compute(config: &ExperimentConfig, mode: Mode, jobs: usize) -> Result<RunOutput> {
    config.validate()?;
    check_mode(config, mode)?;
    let mc = config.mc.config(jobs);
    let hash = config.hash_hex();
    let mut out = RunOutput::default();
    if mode != Mode::Recover {
        if let Some(ineq) = &config.inequalities {
            let diff = config.diffusion()?;
            let x = point_vector(diff.model(), &ineq.start)?;
            let tf = config.test_function.as_ref().expect("validated");
            let f = tf.build(diff.model(), Some(&x))?;
            let bounds = config.bounds.build()?;
            let families = config.families();
            for &t in &ineq.times {
                let p = Problem { diff: &diff, f: &f, x, s: ineq.s, t, bounds: &bounds };
                for mut r in eval_families(&p, &families, &mc)? {
                    r.config_hash = hash.clone();
                    out.reports.push(r);
                }
            }
        }
    }
    if mode != Mode::FlowCert {
        if let Some(rec) = &config.recovery {
            out.recovery = Some(run_recovery(config, rec, &mc)?);
        }
    }
    Ok(out)
}

fn run_recovery(
    config: &ExperimentConfig,
    rec: &super::config::RecoverySpec,
    mc: &crate::semigroup::McConfig,
) -> Result<RecoveryOutput> {
    let model = config.model()?;
    let one = |row: Result<crate::recovery::RecoveryEstimate>| -> Result<RecoveryOutput> {
        Ok(RecoveryOutput {
            kind: rec.kind,
            bracket: None,
            rows: vec![ScanRow {
                point: rec.point.clone().unwrap_or_default(),
                direction: rec.direction.clone().unwrap_or_default(),
                estimate: row?,
            }],
        })
    };
    let empty = Vec::new();
    let point = rec.point.as_ref().unwrap_or(&empty);
    let dir = rec.direction.as_ref().unwrap_or(&empty);
    match rec.kind {
        RecoveryKind::Ricci => {
            let method: RicciMethod = rec.method.parse()?;
            let grid = rec.t_grid.clone().unwrap_or_else(|| DEFAULT_T_GRID.to_vec());
            one(recover_ricci(&model, &config.drift, point, dir, method, &grid, mc))
        }
        RecoveryKind::Evolving => {
            let method: RicciMethod = rec.method.parse()?;
            let scale = config.evolving.expect("validated");
            let grid = rec.t_grid.clone().unwrap_or_else(|| DEFAULT_T_GRID.iter().map(|t| rec.s + t).collect());
            let metric = EvolvingMetric::new(model, scale)?;
            one(recover_evolving(metric, &config.drift, rec.s, point, dir, method, &grid, mc))
        }
        RecoveryKind::Ii => {
            let method: BoundaryMethod = rec.method.parse()?;
            let grid = rec.t_grid.clone().unwrap_or_else(|| DEFAULT_BOUNDARY_T_GRID.to_vec());
            one(recover_ii(&model, point, dir, method, &grid, mc))
        }
        RecoveryKind::PinchScan => {
            let method: RicciMethod = rec.method.parse()?;
            let grid = rec.t_grid.clone().unwrap_or_else(|| DEFAULT_T_GRID.to_vec());
            let spec = rec.scan.expect("validated");
            let scan = pinch_scan(&model, &config.drift, spec, method, &grid, mc)?;
            Ok(RecoveryOutput { kind: rec.kind, bracket: Some([scan.inf, scan.sup]), rows: scan.rows })
        }
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Validates, computes, then writes reports, tables, plots and
/// `manifest.json`. Nothing is written when validation fails.
pub fn run_experiment(config: &ExperimentConfig, mode: Mode, opts: &RunOptions) -> Result<RunManifest> {
    config.validate()?;
    check_mode(config, mode)?;
    let started = unix_now();
    let out = compute(config, mode, opts.jobs.max(1))?;
    let dir = opts
        .out
        .clone()
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    std::fs::create_dir_all(&dir)?;
    let files = emit_report(&out, &dir, &config.output.formats, config.mc.z)?;
    let manifest = RunManifest {
        name: config.name.clone(),
        mode,
        config_hash: config.hash_hex(),
        tool_version: TOOL_VERSION.to_string(),
        started_unix: started,
        finished_unix: unix_now(),
        files,
        exclusion: out
            .reports
            .iter()
            .map(|r| ExclusionLog {
                id: r.id.clone(),
                exclusion_fraction: r.diagnostics.exclusion_fraction,
                moment: r.diagnostics.moment,
            })
            .collect(),
        n_reports: out.reports.len(),
        n_violated: out.n_violated(),
        n_inconclusive: out.n_inconclusive(),
        n_low_confidence: out.n_low_confidence(),
        exit_status: out.exit_status(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(manifest)
}
