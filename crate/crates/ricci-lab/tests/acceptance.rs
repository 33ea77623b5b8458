//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line and then
//! asserts, so `cargo test --test acceptance -- --nocapture` gives a summary.

use std::path::Path;
use std::sync::OnceLock;

use ricci_lab::cli_report::{run_experiment, ExperimentConfig, Mode, RunOptions};
use ricci_lab::frame_sde::{Diffusion, EvolvingMetric, Walker};
use ricci_lab::geometry::{pinned_test_function, DriftField, ManifoldModel, TestFunction};
use ricci_lab::inequalities::{
    compare_sharp, eval_flow_certificate, eval_gradient_estimate, eval_gradient_ineq, read_reports,
    CurvatureBounds, Family, InequalityReport, Problem, Variant, Verdict,
};
use ricci_lab::linalg::{op_norm, vector_from, Vector};
use ricci_lab::recovery::{
    pinch_scan, recover_evolving, recover_ii, BoundaryMethod, RicciMethod, SampleSpec, DEFAULT_BOUNDARY_T_GRID,
    DEFAULT_T_GRID,
};
use ricci_lab::rng::{path_rng, MAIN};
use ricci_lab::semigroup::{estimate_grad_bismut, estimate_grad_fd, run_ensemble, McConfig};

const Z: f64 = 3.0;

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn verdict_line(criterion: &str, pass: bool, detail: &str) {
    println!("{} criterion {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
}

// Criterion 1: E[l_t] of reflected motion on the half line.
#[test]
fn c01_local_time_law() {
    let diff = Diffusion::new(ManifoldModel::half_space(1).unwrap(), DriftField::Zero).unwrap();
    let (t, h) = (0.25, 1e-4);
    let mc = McConfig::new(200_000, h, 1).with_jobs(jobs());
    let (n, h) = mc.steps_for(t);
    let u0 = diff.frame_at(&Vector::zeros(), 0.0);
    let ens = run_ensemble(&mc, 1, |i| {
        let mut rng = path_rng(mc.seed, i, MAIN);
        let mut w = Walker::new(&diff, Vector::zeros(), u0, 0.0, h, i);
        let mut l = 0.0;
        for _ in 0..n {
            l += w.step(&mut rng)?.dl;
        }
        Ok((vec![l], w.checksum()))
    })
    .unwrap();
    let mean = ens.moments.mean()[0];
    let want = 2.0 * t.sqrt() / std::f64::consts::PI.sqrt();
    let rel = (mean - want).abs() / want;
    let pass = rel <= 0.03;
    verdict_line("1", pass, &format!("E[l_t] = {mean:.5} vs {want:.5} (rel. error {:.2}%, tol 3%)", 100.0 * rel));
    assert!(pass);
}

// Criterion 2: OU with linear f makes (ii) and (ii') equalities.
#[test]
fn c02_equality_case() {
    let m = ManifoldModel::euclidean(2).unwrap();
    let diff = Diffusion::new(m, DriftField::LinearOu { lambda: 1.0 }).unwrap();
    let f = TestFunction::linear(&m, &[1.0, 0.0]).unwrap();
    let b = CurvatureBounds::constant(1.0, 1.0).unwrap();
    let mc = McConfig::new(10_000, 1e-3, 2).with_jobs(jobs());
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for t in [0.25, 1.0] {
        let p = Problem { diff: &diff, f: &f, x: vector_from(&[0.5, -0.3]), s: 0.0, t, bounds: &b };
        for v in [Variant::Plain, Variant::Prime] {
            let r = eval_gradient_ineq(v, &p, &mc).unwrap();
            let ok = r.verdict == Verdict::Holds && r.margin.abs() <= Z * r.se_margin + 1e-12;
            worst = worst.max(r.margin.abs());
            pass &= ok;
        }
    }
    verdict_line("2", pass, &format!("grad and grad' margins zero at t = 0.25, 1 (max |margin| {worst:.2e})"));
    assert!(pass);
}

fn scan_bracket(model: ManifoldModel, z: DriftField, spec: SampleSpec, n_paths: usize, seed: u64) -> (f64, f64) {
    let mc = McConfig::new(n_paths, 1.0, seed).with_jobs(jobs());
    let s = pinch_scan(&model, &z, spec, RicciMethod::PairingA, &DEFAULT_T_GRID, &mc).unwrap();
    (s.inf.0, s.sup.0)
}

// Criterion 3: pinch brackets of the unit sphere and the hyperbolic plane.
#[test]
fn c03_sphere_and_hyperbolic_pinch() {
    let spec = SampleSpec { n_points: 8, n_directions: 4 };
    let (lo, hi) = scan_bracket(ManifoldModel::sphere(2, 1.0).unwrap(), DriftField::Zero, spec, 100_000, 3);
    let sphere_ok = lo >= 0.85 && hi <= 1.15;
    let (hlo, hhi) = scan_bracket(ManifoldModel::hyperbolic(2, 1.0).unwrap(), DriftField::Zero, spec, 100_000, 4);
    let hyp_ok = hlo >= -1.15 && hhi <= -0.85;
    verdict_line(
        "3",
        sphere_ok && hyp_ok,
        &format!("sphere [{lo:.4}, {hi:.4}] in [0.85, 1.15]; hyperbolic [{hlo:.4}, {hhi:.4}] in [-1.15, -0.85]"),
    );
    assert!(sphere_ok && hyp_ok);
}

// Criterion 4: Ric^Z = Hess V for V = (x₁² + 2x₂²)/2.
#[test]
fn c04_anisotropic_pinch() {
    let z = DriftField::GradPotential { hessian: vec![vec![1.0, 0.0], vec![0.0, 2.0]], center: vec![0.0, 0.0] };
    let spec = SampleSpec { n_points: 4, n_directions: 4 };
    let (lo, hi) = scan_bracket(ManifoldModel::euclidean(2).unwrap(), z, spec, 20_000, 5);
    let pass = (lo - 1.0).abs() <= 0.1 && (hi - 2.0).abs() <= 0.2;
    verdict_line("4", pass, &format!("bracket [{lo:.4}, {hi:.4}] vs [1, 2] within 10%"));
    assert!(pass);
}

const SUITE_FAMILIES: &str = r#"["grad", "grad'", "poincare(1.5)", "poincare'(1.5)", "logsob", "logsob'"]"#;

/// The four settings of criterion 5 as experiment files.
fn suite_configs() -> Vec<(&'static str, String)> {
    let config = |body: &str, start: &str, h: f64, seed: u64| {
        format!(
            "{body}\n[inequalities]\nfamilies = {SUITE_FAMILIES}\nstart = {start}\ntimes = [0.1, 0.5]\n\n[mc]\nn_paths = 100000\nh = {h}\nseed = {seed}\n"
        )
    };
    let sphere = r#"
manifold = { kind = "sphere", dim = 2, radius = 1.0 }
bounds = { k1 = 1.0, k2 = 1.0 }
test_function = { kind = "linear", coefficients = [0.3, 0.2, 1.0], offset = 2.0 }
"#;
    let hyperbolic = r#"
manifold = { kind = "hyperbolic", dim = 2, scale = 1.0 }
bounds = { k1 = -1.0, k2 = -1.0 }
test_function = { kind = "linear", coefficients = [0.6, -0.4], offset = 2.0 }
"#;
    let ball = r#"
manifold = { kind = "ball", dim = 2, radius = 1.0 }
bounds = { k1 = 0.0, k2 = 0.0, sigma1 = 1.0, sigma2 = 1.0 }
test_function = { kind = "boundary_pinned", point = [1.0, 0.0], direction = [0.0, 1.0], cutoff = 0.5, offset = 3.0 }
"#;
    let evolving = r#"
manifold = { kind = "sphere", dim = 2, radius = 1.0 }
evolving = { kind = "linear", c0 = 1.0, rate = 2.0 }
bounds = { k1 = 0.0, k2 = 0.0 }
test_function = { kind = "linear", coefficients = [0.0, 0.5, 1.0], offset = 3.0 }
"#;
    vec![
        ("sphere", config(sphere, "[0.6, 0.0, 0.8]", 2e-3, 51)),
        ("hyperbolic", config(hyperbolic, "[0.1, 0.0]", 2e-3, 52)),
        ("ball", config(ball, "[0.9, 0.1]", 1e-3, 53)),
        ("evolving", config(evolving, "[0.0, 0.0, 1.0]", 2e-3, 54)),
    ]
}

/// `reports.json` of every suite setting at the given worker count.
fn run_suite(jobs: usize, dir: &Path) -> Vec<(String, String)> {
    suite_configs()
        .into_iter()
        .map(|(name, text)| {
            let c = ExperimentConfig::parse(&text).unwrap();
            let out = dir.join(name);
            run_experiment(&c, Mode::Verify, &RunOptions { jobs, out: Some(out.clone()) }).unwrap();
            (name.to_string(), std::fs::read_to_string(out.join("reports.json")).unwrap())
        })
        .collect()
}

fn single_worker_suite() -> &'static Vec<(String, String)> {
    static RUN: OnceLock<Vec<(String, String)>> = OnceLock::new();
    RUN.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        run_suite(1, tmp.path())
    })
}

// Criterion 5: no violation across the four settings.
#[test]
fn c05_inequality_suite_soundness() {
    let mut reports: Vec<InequalityReport> = Vec::new();
    for (_, json) in single_worker_suite() {
        reports.extend(read_reports(json).unwrap());
    }
    let violated: Vec<_> = reports.iter().filter(|r| r.verdict == Verdict::Violated).map(|r| r.id.as_str()).collect();
    let inconclusive = reports.iter().filter(|r| r.verdict == Verdict::Inconclusive).count();
    let pass = reports.len() == 48 && violated.is_empty() && inconclusive * 24 <= reports.len();
    verdict_line(
        "5",
        pass,
        &format!("{} reports, {} violated {:?}, {inconclusive} inconclusive (max 1 per 24)", reports.len(), violated.len(), violated),
    );
    assert!(pass);
}

// Criterion 6a: a too-large lower bound on the sphere is detected at t = 1.
#[test]
fn c06a_falsification_static() {
    let m = ManifoldModel::sphere(2, 1.0).unwrap();
    let diff = Diffusion::new(m, DriftField::Zero).unwrap();
    let x = vector_from(&[1.0, 0.0, 0.0]);
    let f = pinned_test_function(&m, &x, &vector_from(&[0.0, 0.0, 1.0]), 2.5).unwrap();
    let b = CurvatureBounds::constant(1.5, 1.5).unwrap();
    let mc = McConfig::new(100_000, 2e-3, 61).with_jobs(jobs());
    let p = Problem { diff: &diff, f: &f, x, s: 0.0, t: 1.0, bounds: &b };
    let r = eval_gradient_estimate(&p, &mc).unwrap();
    let pass = r.verdict == Verdict::Violated;
    verdict_line(
        "6a",
        pass,
        &format!(
            "k1 = 1.5 on the unit sphere, t = 1: verdict {}, margin {:.3e} ± {:.1e}",
            r.verdict, r.margin, r.se_margin
        ),
    );
    assert!(pass);
}

// Criterion 6b: a sphere expanding at the wrong rate.
#[test]
fn c06b_falsification_evolving() {
    let wrong = EvolvingMetric::sphere_with_rate(2, 4.0).unwrap();
    let mc = McConfig::new(20_000, 1.0, 62).with_jobs(jobs());
    let x = [0.0, 0.0, 1.0];
    let e = recover_evolving(wrong, &DriftField::Zero, 0.0, &x, &[1.0, 0.0, 0.0], RicciMethod::PairingA, &DEFAULT_T_GRID, &mc)
        .unwrap();
    let rec_ok = (e.value + 1.0).abs() <= 0.1;
    // f = z has its largest gradient on the equator, where the gradient
    // estimate is tight.
    let f = TestFunction::linear(&wrong.base, &[0.0, 0.0, 1.0]).unwrap().with_offset(3.0);
    let start = vector_from(&[1.0, 0.0, 0.0]);
    let mc = McConfig::new(20_000, 2e-3, 63).with_jobs(jobs());
    let rs = eval_flow_certificate(
        wrong,
        DriftField::Zero,
        0.0.into(),
        None,
        &f,
        &start,
        (0.0, 0.5),
        &[Family::GradEstimate, Family::Grad, Family::GradPrime],
        &mc,
    )
    .unwrap();
    let n_violated = rs.iter().filter(|r| r.verdict == Verdict::Violated).count();
    let pass = rec_ok && n_violated >= 1;
    verdict_line(
        "6b",
        pass,
        &format!("recovered {:.4} ± {:.4} (want -1 ± 10%); {n_violated} of {} certificate reports VIOLATED", e.value, e.se, rs.len()),
    );
    assert!(pass);
}

// Criterion 7: the optimized bound never exceeds the better endpoint.
#[test]
fn c07_sharp_bound_dominance() {
    let m = ManifoldModel::euclidean(2).unwrap();
    let diff = Diffusion::new(m, DriftField::LinearOu { lambda: 1.0 }).unwrap();
    let f = TestFunction::sine(&m, &[1.0, 0.7], 0.3).unwrap();
    let b = CurvatureBounds::constant(0.5, 1.5).unwrap();
    let mc = McConfig::new(20_000, 5e-3, 7).with_jobs(jobs());
    let mut pass = true;
    let mut detail = Vec::new();
    for t in [0.25, 0.5, 1.0] {
        let p = Problem { diff: &diff, f: &f, x: vector_from(&[0.2, 0.4]), s: 0.0, t, bounds: &b };
        let c = compare_sharp(&p, &mc).unwrap();
        pass &= c.dominated(Z);
        detail.push(format!("t={t}: {:.3e} vs {:.3e}", c.sharp.rhs, c.grad.rhs.min(c.grad_prime.rhs)));
    }
    verdict_line("7", pass, &detail.join("; "));
    assert!(pass);
}

struct Setting {
    name: &'static str,
    diff: Diffusion,
    f: TestFunction,
    x: Vector,
    k1: f64,
    h: f64,
}

fn cross_validation_settings() -> Vec<Setting> {
    let sphere = ManifoldModel::sphere(2, 1.0).unwrap();
    let hyp = ManifoldModel::hyperbolic(2, 1.0).unwrap();
    let ball = ManifoldModel::ball(2, 1.0).unwrap();
    let expanding = EvolvingMetric::expanding_sphere(2).unwrap();
    vec![
        Setting {
            name: "sphere",
            diff: Diffusion::new(sphere, DriftField::Zero).unwrap(),
            f: TestFunction::linear(&sphere, &[0.3, 0.2, 1.0]).unwrap().with_offset(2.0),
            x: vector_from(&[0.6, 0.0, 0.8]),
            k1: 1.0,
            h: 2e-3,
        },
        Setting {
            name: "hyperbolic",
            diff: Diffusion::new(hyp, DriftField::Zero).unwrap(),
            f: TestFunction::linear(&hyp, &[0.6, -0.4]).unwrap().with_offset(2.0),
            x: vector_from(&[0.1, 0.0]),
            k1: -1.0,
            h: 2e-3,
        },
        Setting {
            name: "ball",
            diff: Diffusion::new(ball, DriftField::Zero).unwrap(),
            f: ricci_lab::geometry::boundary_test_function(&ball, &vector_from(&[1.0, 0.0]), &vector_from(&[0.0, 1.0]), 0.5)
                .unwrap()
                .with_offset(3.0),
            x: vector_from(&[0.9, 0.1]),
            k1: 0.0,
            h: 1e-3,
        },
        Setting {
            name: "evolving",
            diff: Diffusion::evolving(expanding, DriftField::Zero).unwrap(),
            f: TestFunction::linear(&expanding.base, &[0.0, 0.5, 1.0]).unwrap().with_offset(3.0),
            x: vector_from(&[0.0, 0.0, 1.0]),
            k1: 0.0,
            h: 2e-3,
        },
    ]
}

// Criterion 8: Bismut against finite differences, and the Q-norm bound.
#[test]
fn c08_estimator_cross_validation() {
    let mut pass = true;
    let mut detail = Vec::new();
    for s in cross_validation_settings() {
        for t in [0.1, 0.5] {
            let mc = McConfig::new(20_000, s.h, 81).with_jobs(jobs());
            let b = estimate_grad_bismut(&s.diff, &s.f, &s.x, 0.0, t, &mc).unwrap();
            let fd = estimate_grad_fd(&s.diff, &s.f, &s.x, 0.0, t, &mc, 1e-3).unwrap();
            for i in 0..b.value.len() {
                let tol = Z * b.se[i].hypot(fd.se[i]);
                let gap = (b.value[i] - fd.value[i]).abs();
                if gap > tol {
                    pass = false;
                    detail.push(format!("{} t={t} component {i}: gap {gap:.2e} > {tol:.2e}", s.name));
                }
            }
        }
        // ‖Q_{0,t}‖ along individually sampled paths.
        let t = 0.5;
        let mc = McConfig::new(2_000, s.h, 82);
        let (n, h) = mc.steps_for(t);
        let curv = s.diff.curvature();
        let bound = (-s.k1 * t).exp() * (1.0 + 1e-6);
        let u0 = s.diff.frame_at(&s.x, 0.0);
        let mut bad = 0;
        for i in 0..mc.n_paths as u64 {
            let mut rng = path_rng(mc.seed, i, MAIN);
            let mut w = Walker::new(&s.diff, s.x, u0, 0.0, h, i).with_q(&curv);
            for _ in 0..n {
                w.step(&mut rng).unwrap();
            }
            if op_norm(w.q(), s.diff.dim()) > bound {
                bad += 1;
            }
        }
        if bad > 0 {
            pass = false;
            detail.push(format!("{}: {bad} of {} paths exceed the Q-norm bound", s.name, mc.n_paths));
        }
    }
    let msg = if detail.is_empty() {
        "Bismut and finite differences agree within 3 SE on 4 settings x 2 times; Q-norm bound on 100% of paths".to_string()
    } else {
        detail.join("; ")
    };
    verdict_line("8", pass, &msg);
    assert!(pass);
}

// Criterion 9: second fundamental form of the unit disc and of a half plane.
#[test]
fn c09_boundary_ii_recovery() {
    let mc = McConfig::new(20_000, 1.0, 9).with_jobs(jobs());
    let m = BoundaryMethod::GradP { p: 2.0 };
    let ball = ManifoldModel::ball(2, 1.0).unwrap();
    let e = recover_ii(&ball, &[1.0, 0.0], &[0.0, 1.0], m, &DEFAULT_BOUNDARY_T_GRID, &mc).unwrap();
    let half = ManifoldModel::half_space(2).unwrap();
    let g = recover_ii(&half, &[0.0, 0.0], &[1.0, 0.0], m, &DEFAULT_BOUNDARY_T_GRID, &mc).unwrap();
    let pass = (e.value - 1.0).abs() <= 0.15 && g.value.abs() <= 0.05;
    verdict_line("9", pass, &format!("disc {:.4} (want 1 ± 15%), half plane {:.2e} (want 0 ± 0.05)", e.value, g.value));
    assert!(pass);
}

// Criterion 10: worker count does not change the written reports.
#[test]
fn c10_determinism_across_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let eight = run_suite(8, tmp.path());
    let one = single_worker_suite();
    let differing: Vec<_> = one.iter().zip(&eight).filter(|(a, b)| a.1 != b.1).map(|(a, _)| a.0.clone()).collect();
    let pass = differing.is_empty();
    verdict_line("10", pass, &format!("reports.json byte-identical for --jobs 1 and 8 (differing: {differing:?})"));
    assert!(pass);
}
