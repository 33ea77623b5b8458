use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{cell_seed, interior_cell, RecoveryEstimate, RicciMethod, Target};
use crate::error::{Error, Result};
use crate::frame_sde::Diffusion;
use crate::geometry::{DriftField, ManifoldKind, ManifoldModel};
use crate::linalg::Vector;
use crate::rng::{normals, path_rng, SAMPLE};
use crate::semigroup::McConfig;

/// How many points and directions per point a scan samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub n_points: usize,
    pub n_directions: usize,
}

pub const SCAN_CSV_HEADER: [&str; 7] =
    ["point", "direction", "method", "t_or_sqrt_t_intercept", "se", "residual", "flag"];

/// One `(point, direction)` cell of a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub point: Vec<f64>,
    /// Unit vector in the canonical frame at the point.
    pub direction: Vec<f64>,
    pub estimate: RecoveryEstimate,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(";")
}

impl ScanRow {
    pub fn csv_record(&self) -> [String; 7] {
        [
            join(&self.point),
            join(&self.direction),
            self.estimate.method.clone(),
            format!("{:?}", self.estimate.value),
            format!("{:?}", self.estimate.se),
            format!("{:?}", self.estimate.residual),
            self.estimate.flag().to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinchScan {
    /// Smallest and largest recovered value with their standard errors.
    pub inf: (f64, f64),
    pub sup: (f64, f64),
    pub rows: Vec<ScanRow>,
}

/// Deterministic interior sample points of the model.
fn sample_points(model: &ManifoldModel, n: usize, seed: u64) -> Vec<Vector> {
    let mut rng = path_rng(seed, 0, SAMPLE);
    let d = model.dim();
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut x = Vector::zeros();
        match model.kind() {
            ManifoldKind::Sphere { radius } => loop {
                for i in 0..=d {
                    x[i] = uniform(-1.0, 1.0);
                }
                let r = x.norm();
                if r > 0.1 && r <= 1.0 {
                    x *= radius / r;
                    break;
                }
            },
            ManifoldKind::Hyperbolic { .. } | ManifoldKind::EuclideanBall { .. } => {
                let radius = match model.kind() {
                    ManifoldKind::EuclideanBall { radius } => 0.5 * radius,
                    _ => 0.5,
                };
                loop {
                    for i in 0..d {
                        x[i] = uniform(-radius, radius);
                    }
                    if x.norm() <= radius {
                        break;
                    }
                }
            }
            ManifoldKind::FlatTorus { periods } => {
                for i in 0..d {
                    x[i] = uniform(0.0, periods[i]);
                }
            }
            ManifoldKind::HalfSpace => {
                for i in 0..d - 1 {
                    x[i] = uniform(-1.0, 1.0);
                }
                x[d - 1] = uniform(1.0, 2.0);
            }
            ManifoldKind::Euclidean => {
                for i in 0..d {
                    x[i] = uniform(-1.0, 1.0);
                }
            }
        }
        out.push(x);
    }
    out
}

/// Unit frame directions: evenly spaced half-circle angles in two
/// dimensions (`X` and `−X` give the same value), random otherwise.
fn sample_directions(d: usize, n: usize, seed: u64) -> Vec<Vector> {
    let mut rng = path_rng(seed, 1, SAMPLE);
    (0..n)
        .map(|j| {
            let mut e = Vector::zeros();
            match d {
                1 => e[0] = 1.0,
                2 => {
                    let th = std::f64::consts::PI * j as f64 / n as f64;
                    e[0] = th.cos();
                    e[1] = th.sin();
                }
                _ => {
                    e = normals(&mut rng, d);
                    e /= e.norm();
                }
            }
            e
        })
        .collect()
}

/// Recovers `Ric^Z` on `n_points × n_directions` cells and reports the
/// empirical pinch bracket.
pub fn pinch_scan(
    model: &ManifoldModel,
    z: &DriftField,
    spec: SampleSpec,
    method: RicciMethod,
    t_grid: &[f64],
    mc: &McConfig,
) -> Result<PinchScan> {
    if spec.n_points == 0 || spec.n_directions == 0 {
        return Err(Error::InvalidArgument("scan needs at least one point and direction".into()));
    }
    let diff = Diffusion::new(*model, z.clone())?;
    let d = model.dim();
    let points = sample_points(model, spec.n_points, mc.seed);
    let dirs = sample_directions(d, spec.n_directions, mc.seed);
    let mut rows = Vec::with_capacity(points.len() * dirs.len());
    for x in &points {
        let u = model.canonical_frame(x);
        for e in &dirs {
            let cell = rows.len() as u64;
            let dir = u * e;
            let est = interior_cell(&diff, x, 0.0, &dir, method, Target::RicZ)?
                .run(t_grid, &McConfig { seed: cell_seed(mc.seed, cell), ..*mc })?;
            rows.push(ScanRow {
                point: x.iter().take(model.ambient_dim()).copied().collect(),
                direction: e.iter().take(d).copied().collect(),
                estimate: est,
            });
        }
    }
    let pick = |better: fn(f64, f64) -> bool| {
        let mut best = &rows[0].estimate;
        for r in &rows[1..] {
            if better(r.estimate.value, best.value) {
                best = &r.estimate;
            }
        }
        (best.value, best.se)
    };
    let inf = pick(|a, b| a < b);
    let sup = pick(|a, b| a > b);
    Ok(PinchScan { inf, sup, rows })
}
