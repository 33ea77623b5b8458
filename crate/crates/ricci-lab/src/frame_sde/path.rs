use super::stepper::{boundary_factor, CurvatureOracle, Diffusion, Walker};
use crate::error::{Error, Result};
use crate::linalg::{expm_neg, eye, Mat, Vector};
use crate::rng::{path_rng, MAIN};

/// One stored trajectory on the frame bundle.
#[derive(Clone, Debug)]
pub struct PathSample {
    pub d: usize,
    pub ambient: usize,
    pub t0: f64,
    pub h: f64,
    /// Node positions, `steps + 1` of them.
    pub positions: Vec<Vector>,
    /// Frames at the nodes, orthonormal for the metric at the node time.
    pub frames: Vec<Mat>,
    /// Brownian increments in frame coordinates, one per step.
    pub increments: Vec<Vector>,
    /// Local-time increments, one per step.
    pub local_time: Vec<f64>,
    /// Inward normal of the reflection on each step that reflected.
    pub normals: Vec<Option<Vector>>,
    /// Second-fundamental-form scale of the boundary (umbilic).
    pub sigma: f64,
    /// Conformal factors `μ(x_k)·c(t_k)` at the nodes.
    pub metric_factor: Vec<f64>,
}

impl PathSample {
    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.h
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps())
    }

    pub fn hit_boundary(&self, k: usize) -> bool {
        self.normals[k].is_some()
    }

    pub fn total_local_time(&self) -> f64 {
        self.local_time.iter().sum()
    }

    /// Node index of time `s`, which must lie on the grid.
    pub fn node(&self, s: f64) -> Result<usize> {
        let k = (s - self.t0) / self.h;
        let r = k.round();
        if !(r >= 0.0 && r <= self.steps() as f64 && (k - r).abs() <= 1e-7 * r.max(1.0)) {
            return Err(Error::IntervalOutsideGrid { s, t: s });
        }
        Ok(r as usize)
    }

    /// Stochastic parallel transport from node 0 to node `k` as an ambient
    /// matrix: `v ↦ u_k u_0ᵀ G_0 v`.
    pub fn transport(&self, k: usize) -> Mat {
        self.frames[k] * self.frames[0].transpose() * self.metric_factor[0]
    }
}

fn record(diff: &Diffusion, x0: &Vector, t0: f64, horizon: f64, h: f64, seed: u64, path_index: u64) -> Result<PathSample> {
    diff.check_step(h)?;
    diff.model().check_point(x0)?;
    diff.metric().check_time(t0)?;
    let len = horizon - t0;
    let steps = (len / h).round();
    if !(len > 0.0) || (steps * h - len).abs() > 1e-9 * len.max(1.0) {
        return Err(Error::InvalidArgument(format!("horizon {len} is not a multiple of h = {h}")));
    }
    if horizon >= diff.metric().horizon() {
        return Err(Error::InvalidArgument("horizon beyond the metric's lifetime".into()));
    }
    let steps = steps as usize;
    let d = diff.dim();
    let mu = |x: &Vector, t: f64| diff.model().conformal_factor(x) * diff.scale().c(t);
    let mut rng = path_rng(seed, path_index, MAIN);
    let mut w = Walker::new(diff, *x0, diff.frame_at(x0, t0), t0, h, path_index);
    let mut p = PathSample {
        d,
        ambient: diff.model().ambient_dim(),
        t0,
        h,
        positions: Vec::with_capacity(steps + 1),
        frames: Vec::with_capacity(steps + 1),
        increments: Vec::with_capacity(steps),
        local_time: Vec::with_capacity(steps),
        normals: Vec::with_capacity(steps),
        sigma: diff.model().boundary_umbilic(),
        metric_factor: Vec::with_capacity(steps + 1),
    };
    p.positions.push(w.x);
    p.frames.push(w.u);
    p.metric_factor.push(mu(&w.x, t0));
    for _ in 0..steps {
        let db = crate::rng::normals(&mut rng, d) * h.sqrt();
        let rec = w.step_with(&db)?;
        p.increments.push(db);
        p.local_time.push(rec.dl);
        p.normals.push(rec.normal);
        p.positions.push(w.x);
        p.frames.push(w.u);
        p.metric_factor.push(mu(&w.x, w.t));
    }
    Ok(p)
}

/// Simulates one path of the diffusion from `x0` at time 0 up to `horizon`.
///
/// Each step moves along the geodesic with initial velocity
/// `√2·u·ΔB + Z(x)h`, transports the frame along it and re-orthonormalizes
/// against the metric at the new time. Models with boundary reflect.
pub fn simulate_path(diff: &Diffusion, x0: &Vector, horizon: f64, h: f64, seed: u64, path_index: u64) -> Result<PathSample> {
    record(diff, x0, 0.0, horizon, h, seed, path_index)
}

/// As [`simulate_path`], starting at time `s`.
pub fn simulate_path_from(diff: &Diffusion, x0: &Vector, s: f64, horizon: f64, h: f64, seed: u64, path_index: u64) -> Result<PathSample> {
    record(diff, x0, s, horizon, h, seed, path_index)
}

/// Reflecting diffusion: proposals leaving the domain are pushed back along
/// the normal and the pushback distance is the local-time increment.
pub fn simulate_reflected_path(diff: &Diffusion, x0: &Vector, horizon: f64, h: f64, seed: u64, path_index: u64) -> Result<PathSample> {
    if !diff.model().has_boundary() {
        return Err(Error::InvalidArgument("reflection needs a model with boundary".into()));
    }
    record(diff, x0, 0.0, horizon, h, seed, path_index)
}

/// `Q_{s,t}` along a stored path: exponential Euler with the endomorphism
/// taken at the step's start position and mid time, then on reflection steps
/// (when `boundary` is set) the factor `exp(−Δl II)(I − P)`.
pub fn evolve_q(path: &PathSample, oracle: &dyn CurvatureOracle, s: f64, t: f64, boundary: bool) -> Result<Mat> {
    let (a, b) = match (path.node(s), path.node(t)) {
        (Ok(a), Ok(b)) if a <= b => (a, b),
        _ => return Err(Error::IntervalOutsideGrid { s, t }),
    };
    let d = path.d;
    let mut q = eye(d);
    for k in a..b {
        let r = oracle.endo(path.time(k) + 0.5 * path.h, &path.positions[k], &path.frames[k]);
        q *= expm_neg(&r, d, path.h);
        if let (true, Some(n)) = (boundary, path.normals[k]) {
            q *= boundary_factor(&path.frames[k + 1], d, &n, path.sigma, path.local_time[k]);
        }
    }
    Ok(q)
}
