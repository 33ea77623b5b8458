//! Small-time limits that reconstruct `Ric^Z`, the second fundamental form
//! and the evolving curvature `𝓡ᵗᶻ` from semigroup quantities, with linear
//! extrapolation of the quotients to `t = 0`.

mod methods;
mod scan;

pub use methods::{BoundaryMethod, RicciMethod};
pub use scan::{pinch_scan, PinchScan, SampleSpec, ScanRow, SCAN_CSV_HEADER};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_sde::{Diffusion, EvolvingMetric, Walker};
use crate::geometry::{boundary_test_function, pinned_test_function, DriftField, ManifoldKind, ManifoldModel, TestFunction};
use crate::linalg::{Vector, CAP};
use crate::rng::{path_rng, splitmix64, MAIN};
use crate::semigroup::{run_ensemble, McConfig};
use crate::stats::{delta_method, fit_line};

pub const DEFAULT_T_GRID: [f64; 3] = [0.02, 0.04, 0.08];
pub const DEFAULT_BOUNDARY_T_GRID: [f64; 3] = [1e-3, 3e-3, 1e-2];
pub const N_LADDER: [f64; 3] = [4.0, 8.0, 16.0];
/// Largest step as a fraction of the smallest grid time.
pub const INTERIOR_STEP_FRACTION: f64 = 1.0 / 200.0;
/// Boundary quotients scale like `t^{−1/2}`, and so does the local-time bias
/// of the reflection scheme; the step is kept correspondingly smaller.
pub const BOUNDARY_STEP_FRACTION: f64 = 1.0 / 1000.0;
/// Offset making the test function positive for the boundary variance forms.
pub const BOUNDARY_OFFSET: f64 = 4.0;
/// Cutoff radius of pinned test functions. Paths must rarely leave the
/// region where the function is linear in normal coordinates, so this is
/// several diffusion lengths `√(2t)` of the default grids.
pub const DEFAULT_CUTOFF: f64 = 2.5;
const UNIT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    RicZ,
    II,
    EvolvingR,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryEstimate {
    pub target: Target,
    pub method: String,
    /// Extrapolated intercept.
    pub value: f64,
    pub se: f64,
    /// Grid actually used (step-aligned), as elapsed times `t − s`.
    pub t_grid: Vec<f64>,
    /// Whether the fit abscissa is `√t` rather than `t`.
    pub sqrt_fit: bool,
    /// Root mean square residual of the extrapolation fit.
    pub residual: f64,
    pub low_confidence: bool,
    /// Raw quotients on the grid (for the largest `n` on a ladder) and their
    /// standard errors.
    pub quotients: Vec<f64>,
    pub quotient_se: Vec<f64>,
}

impl RecoveryEstimate {
    pub fn flag(&self) -> &'static str {
        if self.low_confidence {
            "LOW_CONFIDENCE"
        } else {
            ""
        }
    }
}

/// Which limit family a cell evaluates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Quotient {
    Interior(RicciMethod),
    Boundary(BoundaryMethod),
}

impl Quotient {
    fn offsets(&self) -> Vec<f64> {
        match self {
            Quotient::Interior(m) if m.uses_ladder() => N_LADDER.to_vec(),
            Quotient::Boundary(BoundaryMethod::Variance { .. }) => vec![BOUNDARY_OFFSET],
            _ => Vec::new(),
        }
    }

    fn exponent(&self) -> f64 {
        match self {
            Quotient::Interior(m) => m.exponent(),
            Quotient::Boundary(m) => m.exponent(),
        }
    }

    fn sqrt_fit(&self) -> bool {
        matches!(self, Quotient::Boundary(_))
    }

    fn name(&self) -> String {
        match self {
            Quotient::Interior(m) => m.to_string(),
            Quotient::Boundary(m) => m.to_string(),
        }
    }
}

/// Observable positions for one grid time.
#[derive(Clone, Copy, Debug)]
struct Slots {
    d: usize,
    stride: usize,
}

impl Slots {
    fn new(d: usize, offsets: usize) -> Self {
        Self { d, stride: 2 * d + 2 + 3 * offsets }
    }
    fn g(&self, k: usize) -> usize {
        k * self.stride
    }
    fn w(&self, k: usize) -> usize {
        k * self.stride + self.d
    }
    fn gp(&self, k: usize) -> usize {
        k * self.stride + 2 * self.d
    }
    fn g2(&self, k: usize) -> usize {
        k * self.stride + 2 * self.d + 1
    }
    /// `f_n²`, `f_n^{2/p}`, `f_n² log f_n²` for offset index `j`.
    fn f(&self, k: usize, j: usize) -> usize {
        k * self.stride + 2 * self.d + 2 + 3 * j
    }
}

fn vec_at(m: &[f64], at: usize, d: usize) -> Vector {
    let mut v = Vector::zeros();
    v.as_mut_slice()[..d].copy_from_slice(&m[at..at + d]);
    v
}

/// Quotient at grid time `k` (elapsed `tau`) for offset index `j`, from means.
fn quotient(q: Quotient, sl: &Slots, x0: &Vector, m: &[f64], k: usize, j: usize, tau: f64) -> f64 {
    let d = sl.d;
    let g = vec_at(m, sl.g(k), d);
    let w = vec_at(m, sl.w(k), d);
    let fs = |j: usize| {
        let i = sl.f(k, j);
        (m[i], m[i + 1], m[i + 2])
    };
    // p(E f² − (E f^{2/p})^p) / (4(p−1)), or the entropy form at p = 1.
    let variance = |j: usize, p: f64| {
        let (f2, fp, ent) = fs(j);
        if p == 1.0 {
            0.25 * (ent - f2 * f2.ln())
        } else {
            p * (f2 - fp.powf(p)) / (4.0 * (p - 1.0))
        }
    };
    match q {
        Quotient::Interior(method) => match method {
            RicciMethod::Grad { p } => (m[sl.gp(k)] - w.norm().powf(p)) / (p * tau),
            RicciMethod::Poincare { p } => (m[sl.g2(k)] - variance(j, p) / tau) / tau,
            RicciMethod::Entropy => {
                let (f2, _, ent) = fs(j);
                (4.0 * tau * m[sl.g2(k)] + f2 * f2.ln() - ent) / (4.0 * tau * tau)
            }
            RicciMethod::PairingA => (x0.dot(&g) - x0.dot(&w)) / tau,
            RicciMethod::PairingB => (w.dot(&g) - w.norm_squared()) / tau,
        },
        Quotient::Boundary(method) => {
            let scale = PI.sqrt() / (2.0 * tau.sqrt());
            match method {
                BoundaryMethod::GradP { p } => scale * (m[sl.gp(k)] - x0.norm().powf(p)) / p,
                BoundaryMethod::PairingA => scale * (x0.dot(&g) - x0.dot(&w)),
                BoundaryMethod::PairingB => scale * (w.dot(&g) - w.norm_squared()),
                BoundaryMethod::Variance { p } => {
                    -0.375 * (PI / tau).sqrt() * (x0.norm_squared() - variance(j, p) / tau)
                }
            }
        }
    }
}

/// OLS intercept weights: `a = Σ c_k y_k`.
fn intercept_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    xs.iter().map(|x| 1.0 / n - mx * (x - mx) / sxx).collect()
}

/// A pinned recovery run on one `(x, X)` cell.
pub(crate) struct Cell<'a> {
    pub diff: &'a Diffusion,
    pub f: TestFunction,
    pub x: Vector,
    pub s: f64,
    pub q: Quotient,
    pub target: Target,
}

fn check_grid(t_grid: &[f64], s: f64) -> Result<()> {
    if t_grid.len() < 3 {
        return Err(Error::GridTooCoarse(t_grid.len()));
    }
    if t_grid.iter().any(|t| !t.is_finite() || *t <= s) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("t grid must be increasing and beyond s".into()));
    }
    Ok(())
}

impl Cell<'_> {
    pub fn run(&self, t_grid: &[f64], mc: &McConfig) -> Result<RecoveryEstimate> {
        check_grid(t_grid, self.s)?;
        let s = self.s;
        let fraction = if self.q.sqrt_fit() { BOUNDARY_STEP_FRACTION } else { INTERIOR_STEP_FRACTION };
        let tau_min = t_grid[0] - s;
        let h_target = mc.h.min(tau_min * fraction);
        let h = tau_min / (tau_min / h_target - 1e-9).ceil();
        self.diff.check_step(h)?;
        let nodes: Vec<usize> = t_grid.iter().map(|t| ((t - s) / h).round() as usize).collect();
        let taus: Vec<f64> = nodes.iter().map(|n| *n as f64 * h).collect();
        let horizon = s + taus[taus.len() - 1];
        self.diff.metric().check_time(horizon)?;
        let d = self.diff.dim();
        let offsets = self.q.offsets();
        let sl = Slots::new(d, offsets.len());
        let nk = taus.len();
        let p = self.q.exponent();
        let u0 = self.diff.frame_at(&self.x, s);
        let x0 = self.diff.components(&self.x, &u0, &self.f.gradient(&self.x));
        let curv = self.diff.curvature();
        let (diff, f, x) = (self.diff, &self.f, self.x);
        let ens = run_ensemble(mc, nk * sl.stride, |i| {
            let mut rng = path_rng(mc.seed, i, MAIN);
            let mut w = Walker::new(diff, x, u0, s, h, i).with_q(&curv);
            let mut obs = vec![0.0; nk * sl.stride];
            let mut done = 0;
            for (k, &node) in nodes.iter().enumerate() {
                while done < node {
                    w.step(&mut rng)?;
                    done += 1;
                }
                let g = w.components(&f.gradient(&w.x));
                let wq = w.q() * g;
                for a in 0..d {
                    obs[sl.g(k) + a] = g[a];
                    obs[sl.w(k) + a] = wq[a];
                }
                let g2 = g.norm_squared();
                obs[sl.gp(k)] = g2.powf(0.5 * p);
                obs[sl.g2(k)] = g2;
                let fx = f.value(&w.x);
                for (j, n) in offsets.iter().enumerate() {
                    let fnx = fx + n;
                    if !(fnx > 0.0) {
                        return Err(Error::NonPositiveF(fnx));
                    }
                    let f2 = fnx * fnx;
                    let at = sl.f(k, j);
                    obs[at] = f2;
                    obs[at + 1] = fnx.powf(2.0 / p);
                    obs[at + 2] = f2 * f2.ln();
                }
            }
            Ok((obs, w.checksum()))
        })?;
        let m = &ens.moments;
        let xs: Vec<f64> = if self.q.sqrt_fit() { taus.iter().map(|t| t.sqrt()).collect() } else { taus.clone() };
        let c = intercept_weights(&xs);
        let q = self.q;
        let ladder: Vec<f64> = offsets.iter().map(|n| 1.0 / n).collect();
        let uses_ladder = matches!(q, Quotient::Interior(mm) if mm.uses_ladder());
        let dl = if uses_ladder { intercept_weights(&ladder) } else { vec![1.0] };
        let n_j = if uses_ladder { offsets.len() } else { 1 };
        let value_of = |mv: &[f64]| -> f64 {
            (0..n_j)
                .map(|j| dl[j] * (0..nk).map(|k| c[k] * quotient(q, &sl, &x0, mv, k, j, taus[k])).sum::<f64>())
                .sum()
        };
        let (value, se) = delta_method(m, value_of);
        let last = n_j.saturating_sub(1);
        let mut quotients = Vec::with_capacity(nk);
        let mut quotient_se = Vec::with_capacity(nk);
        for k in 0..nk {
            let (v, e) = delta_method(m, |mv| quotient(q, &sl, &x0, mv, k, last, taus[k]));
            quotients.push(v);
            quotient_se.push(e);
        }
        let mut residual = 0.0f64;
        let mut intercepts = Vec::with_capacity(n_j);
        for j in 0..n_j {
            let ys: Vec<f64> = (0..nk).map(|k| quotient(q, &sl, &x0, m.mean(), k, j, taus[k])).collect();
            let fit = fit_line(&xs, &ys);
            residual = residual.max(fit.residual);
            intercepts.push(fit.intercept);
        }
        if uses_ladder {
            residual = residual.max(fit_line(&ladder, &intercepts).residual);
        }
        let mean_se = quotient_se.iter().sum::<f64>() / nk as f64;
        let low_confidence = !(value.is_finite() && se.is_finite())
            || residual > (3.0 * mean_se).max(0.05 * value.abs().max(1.0))
            || ens.exclusion_fraction() > mc.exclusion_tol;
        Ok(RecoveryEstimate {
            target: self.target,
            method: q.name(),
            value,
            se,
            t_grid: taus,
            sqrt_fit: q.sqrt_fit(),
            residual,
            low_confidence,
            quotients,
            quotient_se,
        })
    }
}

/// Seed for cell `i` of a scan, independent across cells.
pub(crate) fn cell_seed(seed: u64, i: u64) -> u64 {
    splitmix64(seed ^ splitmix64(i.wrapping_add(0xCE11)))
}

fn check_unit(norm: f64) -> Result<()> {
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidArgument(format!("direction must have unit length, got {norm}")));
    }
    Ok(())
}

fn cutoff_for(model: &ManifoldModel, x: &Vector) -> f64 {
    let limit = model.injectivity_radius().min(model.distance_to_boundary(x));
    DEFAULT_CUTOFF.min(0.9 * limit)
}

fn padded(v: &[f64]) -> Result<Vector> {
    if v.len() > CAP {
        return Err(Error::UnsupportedDimension(v.len()));
    }
    Ok(crate::linalg::vector_from(v))
}

/// Interior recovery at time `s` for a chart vector `X` (`dir`); `dir` is
/// not normalized here.
pub(crate) fn interior_cell<'a>(
    diff: &'a Diffusion,
    x: &Vector,
    s: f64,
    dir: &Vector,
    method: RicciMethod,
    target: Target,
) -> Result<Cell<'a>> {
    method.validate()?;
    let model = diff.model();
    // ∇ˢf = ∇⁰f / c(s) for the scaled metric, so the base gradient is c(s)·X.
    let c = diff.scale().c(s);
    let f = pinned_test_function(model, x, &(dir * c), cutoff_for(model, x))?;
    Ok(Cell { diff, f, x: *x, s, q: Quotient::Interior(method), target })
}

/// `Ric^Z(X, X)` at `x` for a unit tangent vector `X` in chart coordinates.
pub fn recover_ricci(
    model: &ManifoldModel,
    z: &DriftField,
    x: &[f64],
    dir: &[f64],
    method: RicciMethod,
    t_grid: &[f64],
    mc: &McConfig,
) -> Result<RecoveryEstimate> {
    let (x, dir) = (padded(x)?, padded(dir)?);
    model.check_point(&x)?;
    check_unit(model.norm(&x, &model.project_tangent(&x, &dir)))?;
    let diff = Diffusion::new(*model, z.clone())?;
    interior_cell(&diff, &x, 0.0, &dir, method, Target::RicZ)?.run(t_grid, mc)
}

/// `𝓡ˢᶻ(X, X)` at `(s, x)` for `|X|_s = 1`; `t_grid` holds absolute times
/// after `s`.
#[allow(clippy::too_many_arguments)]
pub fn recover_evolving(
    metric: EvolvingMetric,
    z: &DriftField,
    s: f64,
    x: &[f64],
    dir: &[f64],
    method: RicciMethod,
    t_grid: &[f64],
    mc: &McConfig,
) -> Result<RecoveryEstimate> {
    let (x, dir) = (padded(x)?, padded(dir)?);
    let diff = Diffusion::evolving(metric, z.clone())?;
    diff.model().check_point(&x)?;
    diff.metric().check_time(s)?;
    let base = diff.model().norm(&x, &diff.model().project_tangent(&x, &dir));
    check_unit(base * diff.scale().c(s).sqrt())?;
    interior_cell(&diff, &x, s, &dir, method, Target::EvolvingR)?.run(t_grid, mc)
}

/// `II(X, X)` at a boundary point `x` for a unit tangent `X` of `∂M`.
pub fn recover_ii(
    model: &ManifoldModel,
    x: &[f64],
    dir: &[f64],
    method: BoundaryMethod,
    t_grid: &[f64],
    mc: &McConfig,
) -> Result<RecoveryEstimate> {
    method.validate()?;
    if !model.has_boundary() {
        return Err(Error::NotABoundaryPoint);
    }
    let (x, dir) = (padded(x)?, padded(dir)?);
    model.check_point(&x)?;
    check_unit(model.norm(&x, &dir))?;
    let diff = Diffusion::new(*model, DriftField::Zero)?;
    let limit = match model.kind() {
        ManifoldKind::EuclideanBall { radius } => radius,
        _ => f64::INFINITY,
    };
    // Positivity for the variance forms comes from the offset slot.
    let f = boundary_test_function(model, &x, &dir, DEFAULT_CUTOFF.min(0.9 * limit))?;
    let cell = Cell { diff: &diff, f, x, s: 0.0, q: Quotient::Boundary(method), target: Target::II };
    cell.run(t_grid, mc)
}

#[cfg(test)]
mod tests;
