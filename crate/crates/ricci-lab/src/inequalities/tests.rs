use super::*;
use crate::frame_sde::{simulate_path, simulate_reflected_path};
use crate::geometry::{boundary_test_function, ManifoldModel};
use crate::linalg::vector_from;
use proptest::prelude::*;

fn ou(lambda: f64) -> (ManifoldModel, Diffusion) {
    let m = ManifoldModel::euclidean(2).unwrap();
    (m, Diffusion::new(m, DriftField::LinearOu { lambda }).unwrap())
}

#[test]
fn ou_linear_gradient_families_are_equalities() {
    let (m, diff) = ou(1.0);
    let f = TestFunction::linear(&m, &[0.6, -0.8]).unwrap();
    let b = CurvatureBounds::constant(1.0, 1.0).unwrap();
    let mc = McConfig::new(200, 0.01, 3);
    for t in [0.25, 1.0] {
        let p = Problem { diff: &diff, f: &f, x: vector_from(&[0.3, 0.1]), s: 0.0, t, bounds: &b };
        let rs = eval_families(&p, &[Family::Grad, Family::GradPrime, Family::GradEstimate], &mc).unwrap();
        for r in rs {
            assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12, "{r:?}");
            assert!(r.margin.abs() < 1e-12);
            assert_eq!(r.verdict, Verdict::Holds);
        }
    }
}

#[test]
fn ou_variance_families_hold() {
    let (m, diff) = ou(1.0);
    let f = TestFunction::linear(&m, &[0.6, -0.8]).unwrap().with_offset(40.0);
    let b = CurvatureBounds::constant(1.0, 1.0).unwrap();
    let mc = McConfig::new(2000, 0.01, 5);
    let p = Problem { diff: &diff, f: &f, x: Vector::zeros(), s: 0.0, t: 0.5, bounds: &b };
    let fams = [Family::Poincare(2.0), Family::Poincare(1.5), Family::LogSob, Family::LogSobPrime];
    for r in eval_families(&p, &fams, &mc).unwrap() {
        // Linear f under OU: every right-hand side integrand vanishes.
        assert!(r.rhs.abs() < 1e-9, "{r:?}");
        assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
    }
}

#[test]
fn sphere_families_hold() {
    let m = ManifoldModel::sphere(2, 1.0).unwrap();
    let diff = Diffusion::new(m, DriftField::Zero).unwrap();
    let f = TestFunction::linear(&m, &[0.3, 0.2, 1.0]).unwrap().with_offset(2.0);
    let b = CurvatureBounds::constant(1.0, 1.0).unwrap();
    let mc = McConfig::new(1000, 2e-3, 9);
    let x = vector_from(&[0.6, 0.0, 0.8]);
    let p = Problem { diff: &diff, f: &f, x, s: 0.0, t: 0.3, bounds: &b };
    let rs = eval_families(&p, &Family::suite(1.5), &mc).unwrap();
    assert_eq!(rs.len(), 6);
    for r in rs {
        assert_eq!(r.theorem, Theorem::Static);
        assert_ne!(r.verdict, Verdict::Violated, "{r:?}");
        assert!(r.rhs <= 0.0);
    }
}

#[test]
fn wrong_bounds_are_violated() {
    // Asserting Ric ≥ 3 on the unit 2-sphere is false and the gradient
    // estimate detects it.
    let m = ManifoldModel::sphere(2, 1.0).unwrap();
    let diff = Diffusion::new(m, DriftField::Zero).unwrap();
    let f = TestFunction::linear(&m, &[0.0, 0.0, 1.0]).unwrap();
    let b = CurvatureBounds::constant(3.0, 3.0).unwrap();
    let mc = McConfig::new(2000, 2e-3, 2);
    let x = vector_from(&[1.0, 0.0, 0.0]);
    let p = Problem { diff: &diff, f: &f, x, s: 0.0, t: 0.5, bounds: &b };
    let r = eval_gradient_estimate(&p, &mc).unwrap();
    assert_eq!(r.verdict, Verdict::Violated, "{r:?}");
}

#[test]
fn boundary_problem_reports_boundary_theorem() {
    let m = ManifoldModel::ball(2, 1.0).unwrap();
    let diff = Diffusion::new(m, DriftField::Zero).unwrap();
    // Neumann test function; the inequalities are only claimed for Nf = 0.
    let f = boundary_test_function(&m, &vector_from(&[1.0, 0.0]), &vector_from(&[0.0, 1.0]), 0.5)
        .unwrap()
        .with_offset(3.0);
    let b = CurvatureBounds::with_boundary(0.0, 0.0, 1.0, 1.0).unwrap();
    let mc = McConfig::new(1000, 1e-3, 1);
    let p = Problem { diff: &diff, f: &f, x: vector_from(&[0.9, 0.1]), s: 0.0, t: 0.1, bounds: &b };
    let rs = eval_families(&p, &[Family::Grad, Family::LogSob], &mc).unwrap();
    for r in rs {
        assert_eq!(r.theorem, Theorem::Boundary);
        assert_ne!(r.verdict, Verdict::Violated, "{r:?}");
        assert!(r.diagnostics.moment.is_finite());
    }
}

#[test]
fn input_errors() {
    let (m, diff) = ou(1.0);
    let f = TestFunction::linear(&m, &[1.0, 0.0]).unwrap();
    let b = CurvatureBounds::constant(1.0, 1.0).unwrap();
    let mc = McConfig::new(200, 0.01, 1);
    let p = Problem { diff: &diff, f: &f, x: Vector::zeros(), s: 0.0, t: 0.2, bounds: &b };
    assert!(matches!(eval_poincare_ineq(Variant::Plain, &p, 1.5, &mc), Err(Error::NonPositiveF(_))));
    assert!(matches!(eval_poincare_ineq(Variant::Plain, &p, 2.5, &mc), Err(Error::InvalidArgument(_))));
    assert!(matches!(eval_sharp_bound(&p, &mc), Err(Error::InvalidArgument(_))));
    assert!(CurvatureBounds::constant(2.0, 1.0).is_err());
    assert!(CurvatureBounds::with_boundary(0.0, 0.0, 1.0, -1.0).is_err());
}

#[test]
fn sharp_is_degenerate_for_constants() {
    // A = B = 0, so the optimizer has no curvature and the report is flagged.
    let (m, diff) = ou(1.0);
    let f = TestFunction::constant(&m, 1.0);
    let b = CurvatureBounds::constant(0.5, 1.5).unwrap();
    let mc = McConfig::new(200, 0.01, 1);
    let p = Problem { diff: &diff, f: &f, x: Vector::zeros(), s: 0.0, t: 0.2, bounds: &b };
    let r = eval_sharp_bound(&p, &mc).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert!(r.diagnostics.note.contains("denominator"));
}

#[test]
fn sharp_dominates_on_sine() {
    let (m, diff) = ou(1.0);
    let f = TestFunction::sine(&m, &[1.0, 0.7], 0.3).unwrap();
    let b = CurvatureBounds::constant(0.5, 1.5).unwrap();
    let mc = McConfig::new(2000, 0.01, 4);
    let p = Problem { diff: &diff, f: &f, x: vector_from(&[0.2, 0.4]), s: 0.0, t: 0.5, bounds: &b };
    let c = compare_sharp(&p, &mc).unwrap();
    assert!(c.dominated(Z), "{c:?}");
    assert_ne!(c.sharp.verdict, Verdict::Violated);
}

#[test]
fn flow_certificate_on_expanding_sphere() {
    let metric = EvolvingMetric::expanding_sphere(2).unwrap();
    let m = metric.base;
    let f = TestFunction::linear(&m, &[0.0, 0.5, 1.0]).unwrap().with_offset(3.0);
    let mc = McConfig::new(300, 2e-3, 6);
    let rs = eval_flow_certificate(
        metric,
        DriftField::Zero,
        0.0.into(),
        None,
        &f,
        &vector_from(&[0.0, 0.0, 1.0]),
        (0.0, 0.2),
        &[Family::Grad, Family::Poincare(1.5)],
        &mc,
    )
    .unwrap();
    for r in rs {
        assert_eq!(r.theorem, Theorem::Evolving);
        assert_ne!(r.verdict, Verdict::Violated, "{r:?}");
    }
}

#[test]
fn accumulated_weight_on_stored_paths() {
    let m = ManifoldModel::sphere(2, 1.0).unwrap();
    let diff = Diffusion::new(m, DriftField::Zero).unwrap();
    let p = simulate_path(&diff, &vector_from(&[0.0, 0.0, 1.0]), 0.1, 1e-3, 1, 0).unwrap();
    let w = accumulate_weight(&p, &0.7.into(), None, 0.02, 0.08).unwrap();
    assert!((w - 0.7 * 0.06).abs() < 1e-12);
    let z: ScalarField = ScalarField::Function(std::sync::Arc::new(|_, x: &Vector| x[2]));
    let w = accumulate_weight(&p, &z, None, 0.0, 0.1).unwrap();
    assert!(w > 0.09 && w <= 0.1);
    assert!(accumulate_weight(&p, &z, None, 0.0, 0.2).is_err());

    let ball = ManifoldModel::ball(2, 1.0).unwrap();
    let bd = Diffusion::new(ball, DriftField::Zero).unwrap();
    let p = simulate_reflected_path(&bd, &vector_from(&[0.95, 0.0]), 0.05, 1e-4, 2, 0).unwrap();
    let w = accumulate_weight(&p, &0.0.into(), Some(&2.0.into()), 0.0, 0.05).unwrap();
    assert!((w - 2.0 * p.total_local_time()).abs() < 1e-12);
}

fn sharp_unclipped(a: &Vector, b: &Vector, c: &Vector, e: f64) -> f64 {
    sharp_raw(a, b, c, e).unwrap()
}

fn v2(x: f64, y: f64) -> Vector {
    vector_from(&[x, y])
}

proptest! {
    #[test]
    fn sharp_below_both_endpoints(
        a in prop::array::uniform2(-2.0f64..2.0),
        b in prop::array::uniform2(-2.0f64..2.0),
        c in prop::array::uniform2(-2.0f64..2.0),
        e in 1.001f64..3.0,
    ) {
        let (a, b, c) = (v2(a[0], a[1]), v2(b[0], b[1]), v2(c[0], c[1]));
        prop_assume!((b - a).norm_squared() > 1e-6);
        let s = sharp_unclipped(&a, &b, &c, e);
        let grad = 4.0 * ((e - 1.0) * a.norm_squared() + a.dot(&b) - a.dot(&c));
        let prime = 4.0 * (e * b.norm_squared() - b.dot(&c));
        let tol = 1e-9 * (1.0 + grad.abs() + prime.abs());
        prop_assert!(s <= grad + tol && s <= prime + tol, "{s} {grad} {prime}");
    }

    #[test]
    fn verdict_is_monotone_in_margin(m in -1.0f64..1.0, se in 0.0f64..0.5, dm in 0.0f64..1.0) {
        let a = verdict(0.0, 0.0, m, se, Z, false);
        let b = verdict(0.0, 0.0, m + dm, se, Z, false);
        prop_assert!(!(a == Verdict::Holds && b == Verdict::Violated));
    }
}
