use super::*;
use crate::linalg::vector_from;

fn mc(n: usize, seed: u64) -> McConfig {
    McConfig::new(n, 1.0, seed)
}

#[test]
fn flat_space_pairing_is_exactly_zero() {
    let m = ManifoldModel::euclidean(2).unwrap();
    let e = recover_ricci(&m, &DriftField::Zero, &[0.1, 0.2], &[0.6, 0.8], RicciMethod::PairingA, &DEFAULT_T_GRID, &mc(200, 1))
        .unwrap();
    assert_eq!(e.value, 0.0);
    assert_eq!(e.target, Target::RicZ);
    assert_eq!(e.t_grid.len(), 3);
}

#[test]
fn ou_recovers_lambda() {
    let m = ManifoldModel::euclidean(2).unwrap();
    let z = DriftField::LinearOu { lambda: 1.0 };
    for method in [RicciMethod::PairingA, RicciMethod::PairingB, RicciMethod::Grad { p: 2.0 }] {
        let e = recover_ricci(&m, &z, &[0.0, 0.0], &[1.0, 0.0], method, &DEFAULT_T_GRID, &mc(2000, 2)).unwrap();
        assert!((e.value - 1.0).abs() < 0.05, "{method}: {e:?}");
    }
}

#[test]
fn sphere_methods_agree() {
    let m = ManifoldModel::sphere(2, 1.0).unwrap();
    let x = [0.0, 0.6, 0.8];
    let dir = [1.0, 0.0, 0.0];
    let mut got = Vec::new();
    for method in [RicciMethod::Grad { p: 2.0 }, RicciMethod::PairingA, RicciMethod::PairingB] {
        let e = recover_ricci(&m, &DriftField::Zero, &x, &dir, method, &DEFAULT_T_GRID, &mc(4000, 3)).unwrap();
        assert!((e.value - 1.0).abs() < 0.1, "{method}: {e:?}");
        got.push(e);
    }
    for a in &got {
        for b in &got {
            assert!((a.value - b.value).abs() <= 3.0 * a.se.hypot(b.se) + 1e-9, "{a:?} {b:?}");
        }
    }
}

#[test]
fn scaling_the_direction_scales_by_its_square() {
    let m = ManifoldModel::sphere(2, 1.0).unwrap();
    let diff = Diffusion::new(m, DriftField::Zero).unwrap();
    let x = vector_from(&[0.0, 0.0, 1.0]);
    let dir = vector_from(&[1.0, 0.0, 0.0]);
    let run = |c: f64| {
        interior_cell(&diff, &x, 0.0, &(dir * c), RicciMethod::PairingA, Target::RicZ)
            .unwrap()
            .run(&DEFAULT_T_GRID, &mc(300, 4))
            .unwrap()
    };
    let (a, b) = (run(1.0), run(2.0));
    assert!((b.value - 4.0 * a.value).abs() < 1e-9 * a.value.abs().max(1.0), "{} {}", a.value, b.value);
}

#[test]
fn grid_and_direction_checks() {
    let m = ManifoldModel::euclidean(2).unwrap();
    let z = DriftField::Zero;
    let r = recover_ricci(&m, &z, &[0.0, 0.0], &[1.0, 0.0], RicciMethod::PairingA, &[0.02, 0.04], &mc(200, 1));
    assert!(matches!(r, Err(Error::GridTooCoarse(2))));
    let r = recover_ricci(&m, &z, &[0.0, 0.0], &[2.0, 0.0], RicciMethod::PairingA, &DEFAULT_T_GRID, &mc(200, 1));
    assert!(matches!(r, Err(Error::InvalidArgument(_))));
    let r = recover_ii(&m, &[0.0, 0.0], &[1.0, 0.0], BoundaryMethod::PairingA, &DEFAULT_BOUNDARY_T_GRID, &mc(200, 1));
    assert!(matches!(r, Err(Error::NotABoundaryPoint)));
}

#[test]
fn poincare_ladder_on_ou() {
    let m = ManifoldModel::euclidean(2).unwrap();
    let z = DriftField::LinearOu { lambda: 1.0 };
    let e = recover_ricci(&m, &z, &[0.0, 0.0], &[0.0, 1.0], RicciMethod::Poincare { p: 2.0 }, &DEFAULT_T_GRID, &mc(20_000, 5))
        .unwrap();
    assert!((e.value - 1.0).abs() <= 4.0 * e.se + 0.05, "{e:?}");
    assert!(e.se > 0.0);
}

#[test]
fn flat_boundary_has_no_curvature() {
    let m = ManifoldModel::half_space(2).unwrap();
    let e = recover_ii(&m, &[0.0, 0.0], &[1.0, 0.0], BoundaryMethod::GradP { p: 2.0 }, &DEFAULT_BOUNDARY_T_GRID, &mc(300, 6))
        .unwrap();
    assert!(e.value.abs() < 1e-9, "{e:?}");
    assert!(e.sqrt_fit);
}

#[test]
fn ball_boundary_curvature() {
    let m = ManifoldModel::ball(2, 1.0).unwrap();
    let e = recover_ii(&m, &[1.0, 0.0], &[0.0, 1.0], BoundaryMethod::GradP { p: 2.0 }, &DEFAULT_BOUNDARY_T_GRID, &mc(2000, 7))
        .unwrap();
    assert!((e.value - 1.0).abs() < 0.15, "{e:?}");
}

#[test]
fn evolving_flow_has_vanishing_curvature() {
    let metric = EvolvingMetric::expanding_sphere(2).unwrap();
    let e = recover_evolving(metric, &DriftField::Zero, 0.0, &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], RicciMethod::PairingA, &DEFAULT_T_GRID, &mc(1000, 8))
        .unwrap();
    assert!(e.value.abs() < 0.05, "{e:?}");
    assert_eq!(e.target, Target::EvolvingR);

    let wrong = EvolvingMetric::sphere_with_rate(2, 4.0).unwrap();
    let e = recover_evolving(wrong, &DriftField::Zero, 0.0, &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], RicciMethod::PairingA, &DEFAULT_T_GRID, &mc(1000, 8))
        .unwrap();
    assert!((e.value + 1.0).abs() < 0.1, "{e:?}");
}

#[test]
fn small_scan_on_torus() {
    let m = ManifoldModel::flat_torus(&[6.0, 6.0]).unwrap();
    let spec = SampleSpec { n_points: 2, n_directions: 2 };
    let s = pinch_scan(&m, &DriftField::Zero, spec, RicciMethod::PairingA, &DEFAULT_T_GRID, &mc(200, 9)).unwrap();
    assert_eq!(s.rows.len(), 4);
    assert!(s.inf.0 >= -0.05 && s.sup.0 <= 0.05);
    assert_eq!(s.rows[0].csv_record().len(), SCAN_CSV_HEADER.len());
}
