use ricci_lab::cli_report::{
    compute, run_experiment, ExperimentConfig, Mode, RunOptions, EXIT_INVALID, QUOTIENT_CSV_HEADER,
};
use ricci_lab::inequalities::{read_reports, Verdict};
use ricci_lab::Error;

const FLAT: &str = r#"
name = "flat"
manifold = { kind = "euclidean", dim = 1 }
bounds = { k1 = 0.0, k2 = 0.0 }
test_function = { kind = "linear", coefficients = [1.0] }

[inequalities]
families = ["grad"]
start = [0.3]
times = [0.5]

[mc]
n_paths = 400
h = 0.01
seed = 3
"#;

const TORUS_SCAN: &str = r#"
manifold = { kind = "flat_torus", periods = [6.283185307179586, 6.283185307179586] }
drift = { kind = "zero" }

[recovery]
kind = "pinch_scan"
method = "iv-a"
scan = { n_points = 2, n_directions = 2 }

[mc]
n_paths = 200
h = 0.01
seed = 5
"#;

fn opts(dir: &std::path::Path, jobs: usize) -> RunOptions {
    RunOptions { jobs, out: Some(dir.to_path_buf()) }
}

#[test]
fn minimal_flat_run_holds() {
    let tmp = tempfile::tempdir().unwrap();
    let c = ExperimentConfig::parse(FLAT).unwrap();
    let m = run_experiment(&c, Mode::Verify, &opts(tmp.path(), 1)).unwrap();
    assert_eq!(m.n_reports, 1);
    assert_eq!(m.exit_status, 0);
    m.verify_files(tmp.path()).unwrap();
    let reports = read_reports(&std::fs::read_to_string(tmp.path().join("reports.json")).unwrap()).unwrap();
    assert_eq!(reports.len(), 1);
    let r = &reports[0];
    assert_eq!(r.verdict, Verdict::Holds);
    assert_eq!(r.config_hash, c.hash_hex());
    // JSON keeps every digit, so the margin is reproduced to rounding.
    assert!((r.margin - (r.rhs - r.lhs)).abs() <= 1e-12 * (1.0 + r.lhs.abs() + r.rhs.abs()));
    let svg = std::fs::read_to_string(tmp.path().join("ineq_static_grad.svg")).unwrap();
    assert!(svg.starts_with("<?xml version=\"1.0\""));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"], c.hash_hex());
}

#[test]
fn invalid_bounds_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let c = ExperimentConfig::parse(&FLAT.replace("k1 = 0.0", "k1 = 2.0")).unwrap();
    let e = run_experiment(&c, Mode::Verify, &opts(&out, 1)).unwrap_err();
    assert!(matches!(e, Error::ConfigInvalid(_)));
    assert_eq!(ricci_lab::cli_report::error_status(&e), EXIT_INVALID);
    assert!(!out.exists());
}

#[test]
fn mode_requirements() {
    let c = ExperimentConfig::parse(FLAT).unwrap();
    assert!(matches!(compute(&c, Mode::Recover, 1), Err(Error::ConfigInvalid(_))));
    assert!(matches!(compute(&c, Mode::FlowCert, 1), Err(Error::ConfigInvalid(_))));
}

#[test]
fn scan_tables_and_plots() {
    let tmp = tempfile::tempdir().unwrap();
    let c = ExperimentConfig::parse(TORUS_SCAN).unwrap();
    let m = run_experiment(&c, Mode::Recover, &opts(tmp.path(), 1)).unwrap();
    m.verify_files(tmp.path()).unwrap();
    let cells = 2 * 2;
    let mut r = csv::Reader::from_path(tmp.path().join("recovery.csv")).unwrap();
    assert_eq!(r.records().count(), cells);
    let mut q = csv::Reader::from_path(tmp.path().join("recovery_quotients.csv")).unwrap();
    assert_eq!(q.headers().unwrap().len(), QUOTIENT_CSV_HEADER.len());
    // One row per (point, direction, method, t).
    assert_eq!(q.records().count(), cells * 3);
    let fits = m.files.iter().filter(|f| f.path.starts_with("recovery_fit_")).count();
    assert_eq!(fits, cells);
}

#[test]
fn outputs_do_not_depend_on_jobs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let text = FLAT.replace("families = [\"grad\"]", "families = [\"grad\", \"grad'\"]").replace("times = [0.5]", "times = [0.2, 0.5]");
    let c = ExperimentConfig::parse(&text).unwrap();
    run_experiment(&c, Mode::Verify, &opts(a.path(), 1)).unwrap();
    run_experiment(&c, Mode::Verify, &opts(b.path(), 3)).unwrap();
    for f in ["reports.json", "reports.csv", "ineq_static_grad.svg"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
