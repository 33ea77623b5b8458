use serde::{Deserialize, Serialize};

use super::ensemble::{run_ensemble, Ensemble, McConfig};
use super::weights::{WeightAccumulator, WeightSpec};
use crate::error::{Error, Result};
use crate::frame_sde::{Diffusion, Walker};
use crate::geometry::TestFunction;
use crate::linalg::{Mat, Vector};
use crate::rng::{path_rng, BRANCH, MAIN};

/// A Monte Carlo estimate with per-component standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: Vec<f64>,
    pub se: Vec<f64>,
    pub n_paths: usize,
    pub n_excluded: usize,
    /// Set when too many paths were excluded or a moment is not finite.
    pub flagged: bool,
    pub checksum: u64,
}

impl McEstimate {
    pub fn from_ensemble(ens: &Ensemble, mc: &McConfig) -> Self {
        let m = &ens.moments;
        Self {
            value: m.mean().to_vec(),
            se: (0..m.len()).map(|i| m.se(i)).collect(),
            n_paths: ens.n_paths,
            n_excluded: ens.n_excluded,
            flagged: ens.exclusion_fraction() > mc.exclusion_tol || !ens.all_finite(),
            checksum: ens.checksum,
        }
    }

    pub fn scalar(&self) -> f64 {
        self.value[0]
    }
}

/// Start point and `g_s`-orthonormal canonical frame.
pub(crate) fn start(diff: &Diffusion, x: &Vector, s: f64, t: f64) -> Result<(Vector, Mat)> {
    diff.model().check_point(x)?;
    diff.metric().check_time(s)?;
    if !(t > s) {
        return Err(Error::InvalidArgument(format!("need t > s, got s = {s}, t = {t}")));
    }
    diff.metric().check_time(t)?;
    Ok((*x, diff.frame_at(x, s)))
}

fn steps(diff: &Diffusion, mc: &McConfig, len: f64) -> Result<(usize, f64)> {
    let (n, h) = mc.steps_for(len);
    diff.check_step(h)?;
    Ok((n, h))
}

/// `P_{s,t} f(x) = E f(X_t)` for the diffusion started at `(s, x)`.
pub fn estimate_ptf(diff: &Diffusion, f: &TestFunction, x: &Vector, s: f64, t: f64, mc: &McConfig) -> Result<McEstimate> {
    let (x0, u0) = start(diff, x, s, t)?;
    let (n, h) = steps(diff, mc, t - s)?;
    let ens = run_ensemble(mc, 1, |i| {
        let mut rng = path_rng(mc.seed, i, MAIN);
        let mut w = Walker::new(diff, x0, u0, s, h, i);
        for _ in 0..n {
            w.step(&mut rng)?;
        }
        Ok((vec![f.value(&w.x)], w.checksum()))
    })?;
    Ok(McEstimate::from_ensemble(&ens, mc))
}

/// Bismut representation `∇P_{s,t} f(x) = E[Q_{s,t} //⁻¹ ∇f(X_t)]`, in the
/// canonical frame at `x`.
pub fn estimate_grad_bismut(diff: &Diffusion, f: &TestFunction, x: &Vector, s: f64, t: f64, mc: &McConfig) -> Result<McEstimate> {
    let (x0, u0) = start(diff, x, s, t)?;
    let (n, h) = steps(diff, mc, t - s)?;
    let d = diff.dim();
    let curv = diff.curvature();
    let ens = run_ensemble(mc, d, |i| {
        let mut rng = path_rng(mc.seed, i, MAIN);
        let mut w = Walker::new(diff, x0, u0, s, h, i).with_q(&curv);
        for _ in 0..n {
            w.step(&mut rng)?;
        }
        let g = w.components(&f.gradient(&w.x));
        let v = w.q() * g;
        Ok((v.iter().take(d).copied().collect(), w.checksum()))
    })?;
    Ok(McEstimate::from_ensemble(&ens, mc))
}

/// Central differences of `x ↦ P_{s,t} f(x)` along the canonical frame, with
/// every perturbed start driven by the same increments.
pub fn estimate_grad_fd(
    diff: &Diffusion,
    f: &TestFunction,
    x: &Vector,
    s: f64,
    t: f64,
    mc: &McConfig,
    delta: f64,
) -> Result<McEstimate> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let (x0, u0) = start(diff, x, s, t)?;
    let (n, h) = steps(diff, mc, t - s)?;
    let d = diff.dim();
    let model = diff.model();
    let mut starts = Vec::with_capacity(2 * d);
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let v: Vector = u0.column(i) * (sign * delta);
            let y = model.exp_map(&x0, &v)?;
            let mut u = Mat::zeros();
            for j in 0..d {
                u.set_column(j, &model.transport_geodesic(&x0, &y, &u0.column(j).into())?);
            }
            starts.push((y, u));
        }
    }
    let ens = run_ensemble(mc, d, |i| {
        let mut out = vec![0.0; d];
        let mut checksum = 0;
        for (k, (y, u)) in starts.iter().enumerate() {
            let mut rng = path_rng(mc.seed, i, MAIN);
            let mut w = Walker::new(diff, *y, *u, s, h, i);
            for _ in 0..n {
                w.step(&mut rng)?;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            out[k / 2] += sign * f.value(&w.x) / (2.0 * delta);
            checksum = w.checksum();
        }
        Ok((out, checksum))
    })?;
    Ok(McEstimate::from_ensemble(&ens, mc))
}

/// The vector field paired against `//⁻¹∇f(X_t)` at time `r`.
#[derive(Clone, Debug, PartialEq)]
pub enum PairingInner {
    /// `∇g(X_r)`.
    Gradient,
    /// `∇P_{r,t} g(X_r)`, itself estimated by Bismut on an independent branch
    /// started at `(r, X_r)`; only a plain gradient may sit inside.
    Semigroup(Box<PairingInner>),
}

impl PairingInner {
    fn depth(&self) -> usize {
        match self {
            PairingInner::Gradient => 0,
            PairingInner::Semigroup(inner) => 1 + inner.depth(),
        }
    }
}

/// `E[w · ⟨V(X_r), //_{r,t}⁻¹ ∇f(X_t)⟩]` with `w` accumulated on `[r, t]`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_weighted_pairing(
    diff: &Diffusion,
    f: &TestFunction,
    g: &TestFunction,
    x: &Vector,
    (s, r, t): (f64, f64, f64),
    weight: &WeightSpec,
    inner: &PairingInner,
    mc: &McConfig,
) -> Result<McEstimate> {
    if inner.depth() > 1 {
        return Err(Error::NestedDepthExceeded);
    }
    if !(s <= r && r <= t) {
        return Err(Error::InvalidArgument(format!("need s <= r <= t, got {s}, {r}, {t}")));
    }
    let (x0, u0) = start(diff, x, s, t)?;
    let head = if r > s { Some(steps(diff, mc, r - s)?) } else { None };
    let tail = if t > r { Some(steps(diff, mc, t - r)?) } else { None };
    let curv = diff.curvature();
    let ens = run_ensemble(mc, 1, |i| {
        let mut rng = path_rng(mc.seed, i, MAIN);
        let mut w = Walker::new(diff, x0, u0, s, head.map_or(1.0, |p| p.1), i);
        if let Some((n, _)) = head {
            for _ in 0..n {
                w.step(&mut rng)?;
            }
        }
        let (xr, ur) = (w.x, w.u);
        let v = match inner {
            PairingInner::Gradient => w.components(&g.gradient(&xr)),
            PairingInner::Semigroup(_) => match tail {
                None => w.components(&g.gradient(&xr)),
                Some((n, h)) => {
                    let mut brng = path_rng(mc.seed, i, BRANCH);
                    let mut b = Walker::new(diff, xr, ur, r, h, i).with_q(&curv);
                    for _ in 0..n {
                        b.step(&mut brng)?;
                    }
                    b.q() * b.components(&g.gradient(&b.x))
                }
            },
        };
        let head_sum = w.checksum();
        let mut acc = WeightAccumulator::new(weight);
        if let Some((n, h)) = tail {
            let mut m = Walker::new(diff, xr, ur, r, h, i);
            for _ in 0..n {
                acc.push(&m.step(&mut rng)?);
            }
            w = m;
        }
        let gt = w.components(&f.gradient(&w.x));
        Ok((vec![acc.value() * v.dot(&gt)], head_sum ^ w.checksum()))
    })?;
    Ok(McEstimate::from_ensemble(&ens, mc))
}

/// `E[w · |∇f|²(X_t)]` with `w` accumulated on `[r, t]`.
pub fn estimate_weighted_norm(
    diff: &Diffusion,
    f: &TestFunction,
    x: &Vector,
    (s, r, t): (f64, f64, f64),
    weight: &WeightSpec,
    mc: &McConfig,
) -> Result<McEstimate> {
    if !(s <= r && r <= t) {
        return Err(Error::InvalidArgument(format!("need s <= r <= t, got {s}, {r}, {t}")));
    }
    let (x0, u0) = start(diff, x, s, t)?;
    let head = if r > s { Some(steps(diff, mc, r - s)?) } else { None };
    let tail = if t > r { Some(steps(diff, mc, t - r)?) } else { None };
    let ens = run_ensemble(mc, 1, |i| {
        let mut rng = path_rng(mc.seed, i, MAIN);
        let mut w = Walker::new(diff, x0, u0, s, head.map_or(1.0, |p| p.1), i);
        if let Some((n, _)) = head {
            for _ in 0..n {
                w.step(&mut rng)?;
            }
        }
        let head_sum = w.checksum();
        let mut acc = WeightAccumulator::new(weight);
        if let Some((n, h)) = tail {
            let mut m = Walker::new(diff, w.x, w.u, r, h, i);
            for _ in 0..n {
                acc.push(&m.step(&mut rng)?);
            }
            w = m;
        }
        let gt = w.components(&f.gradient(&w.x));
        Ok((vec![acc.value() * gt.norm_squared()], head_sum ^ w.checksum()))
    })?;
    Ok(McEstimate::from_ensemble(&ens, mc))
}
