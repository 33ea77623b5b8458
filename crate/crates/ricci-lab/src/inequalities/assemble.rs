//! One ensemble per `(problem, t)` that carries every observable the
//! inequality families need, so all families share common random numbers.

use super::bounds::CurvatureBounds;
use super::report::{Family, Theorem};
use crate::error::{Error, Result};
use crate::frame_sde::{Diffusion, Walker};
use crate::geometry::TestFunction;
use crate::linalg::{Mat, Vector};
use crate::rng::{path_rng, BRANCH, BRANCH2, MAIN};
use crate::semigroup::{phi, run_ensemble, start, Ensemble, McConfig};

/// Checkpoint segments on `[s, t]` for the time integrals.
pub const SEGMENTS: usize = 15;

/// An inequality instance: diffusion, test function `f` (offset included),
/// start `(s, x)`, end time `t` and the asserted bounds.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    pub diff: &'a Diffusion,
    pub f: &'a TestFunction,
    pub x: Vector,
    pub s: f64,
    pub t: f64,
    pub bounds: &'a CurvatureBounds,
}

impl Problem<'_> {
    pub fn theorem(&self) -> Theorem {
        if !self.diff.is_static() {
            Theorem::Evolving
        } else if self.diff.model().has_boundary() {
            Theorem::Boundary
        } else {
            Theorem::Static
        }
    }
}

/// Positions of the observables in the ensemble's moment vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub d: usize,
    /// `//⁻¹∇f(x)` at time `s`, i.e. `∇f(x)` in the start frame.
    pub g0: usize,
    /// `Q_{s,t}//⁻¹∇f(X_t)`.
    pub w0: usize,
    /// `e^{−𝒦₁[s,t]}//⁻¹∇f(X_t)`.
    pub c: usize,
    /// `e^{½(𝒦₂−𝒦₁)[s,t]}`.
    pub w2h: usize,
    /// `e^{−2𝒦₁[s,t]}|∇f|²(X_t)`.
    pub lhs_w: usize,
    /// `∫_s^t e^{−2𝒦₁[r,t]}dr · |∇f|²(X_t)`.
    pub lhs_int: usize,
    pub f2: usize,
    /// `f^{2/p}(X_t)` for each requested exponent.
    pub fp: Vec<(f64, usize)>,
    pub ent: usize,
    /// Pathwise time integrals behind the unprimed and primed variance bounds.
    pub rhs3: usize,
    pub rhs3p: usize,
    /// `e^{−2.5𝒦₁[s,t]}`.
    pub moment: usize,
    pub len: usize,
}

impl Layout {
    fn new(d: usize, ps: &[f64]) -> Self {
        let mut n = 0;
        let mut take = |k: usize| {
            let i = n;
            n += k;
            i
        };
        let g0 = take(d);
        let w0 = take(d);
        let c = take(d);
        let w2h = take(1);
        let lhs_w = take(1);
        let lhs_int = take(1);
        let f2 = take(1);
        let fp = ps.iter().map(|&p| (p, take(1))).collect();
        let ent = take(1);
        let rhs3 = take(1);
        let rhs3p = take(1);
        let moment = take(1);
        Self { d, g0, w0, c, w2h, lhs_w, lhs_int, f2, fp, ent, rhs3, rhs3p, moment, len: n }
    }

    pub fn fp_index(&self, p: f64) -> Option<usize> {
        self.fp.iter().find(|(q, _)| *q == p).map(|(_, i)| *i)
    }
}

/// Result of [`build`]: reduced observables plus what the evaluators need.
#[derive(Clone, Debug)]
pub struct IneqEnsemble {
    pub ens: Ensemble,
    pub layout: Layout,
    pub theorem: Theorem,
    pub t: f64,
    pub flagged: bool,
    pub branches: bool,
}

struct Node {
    x: Vector,
    u: Mat,
    t: f64,
    g: Vector,
    c1: f64,
    c2: f64,
}

fn dot(a: &Vector, b: &Vector) -> f64 {
    a.dot(b)
}

/// Trapezoid over the checkpoint values with spacing `dr`.
fn trapezoid(v: &[f64], dr: f64) -> f64 {
    let n = v.len() - 1;
    dr * (0.5 * (v[0] + v[n]) + v[1..n].iter().sum::<f64>())
}

/// Runs the shared ensemble for the requested families.
pub fn build(p: &Problem, families: &[Family], mc: &McConfig) -> Result<IneqEnsemble> {
    p.bounds.validate()?;
    let (x0, u0) = start(p.diff, &p.x, p.s, p.t)?;
    let d = p.diff.dim();
    let mut ps: Vec<f64> = Vec::new();
    for f in families {
        if let Some(q) = f.exponent() {
            if !(q > 1.0 && q <= 2.0) {
                return Err(Error::InvalidArgument(format!("Poincaré exponent {q} outside (1, 2]")));
            }
            if !ps.contains(&q) {
                ps.push(q);
            }
        }
    }
    let positivity = families.iter().any(Family::needs_positive_f);
    let branches = families.iter().any(Family::needs_branches);
    let layout = Layout::new(d, &ps);
    let (n, h) = mc.steps_multiple(p.t - p.s, SEGMENTS);
    p.diff.check_step(h)?;
    let m = n / SEGMENTS;
    let tau = p.t - p.s;
    let dr = tau / SEGMENTS as f64;
    let lower = p.bounds.lower();
    let upper = p.bounds.upper();
    let k1_const = if lower.is_deterministic() { lower.k.constant() } else { None };
    let w2h_random = !p.bounds.half_difference_is_deterministic();
    let curv = p.diff.curvature();
    let f = p.f;
    let diff = p.diff;

    let ens = run_ensemble(mc, layout.len, |i| {
        let mut rng = path_rng(mc.seed, i, MAIN);
        let mut w = Walker::new(diff, x0, u0, p.s, h, i).with_q(&curv);
        let mut nodes = Vec::with_capacity(SEGMENTS + 1);
        let mut seg_q = Vec::with_capacity(SEGMENTS);
        let (mut c1, mut c2, mut e_int) = (0.0f64, 0.0f64, 0.0f64);
        nodes.push(Node { x: w.x, u: w.u, t: w.t, g: w.components(&f.gradient(&w.x)), c1, c2 });
        for _ in 0..SEGMENTS {
            for _ in 0..m {
                let rec = w.step(&mut rng)?;
                let (a, b) = (lower.increment(&rec), upper.increment(&rec));
                if a > b + 1e-12 * (1.0 + a.abs()) {
                    return Err(Error::InvalidArgument(format!(
                        "lower curvature bound exceeds upper bound near t = {}",
                        rec.t0
                    )));
                }
                e_int += 0.5 * h * ((2.0 * c1).exp() + (2.0 * (c1 + a)).exp());
                c1 += a;
                c2 += b;
            }
            seg_q.push(w.take_q());
            nodes.push(Node { x: w.x, u: w.u, t: w.t, g: w.components(&f.gradient(&w.x)), c1, c2 });
        }
        let gt = nodes[SEGMENTS].g;
        let (c1t, c2t) = (c1, c2);
        // W_j = Q_{r_j,t} //⁻¹∇f(X_t) in the frame at r_j.
        let mut wv = vec![gt; SEGMENTS + 1];
        for j in (0..SEGMENTS).rev() {
            wv[j] = seg_q[j] * wv[j + 1];
        }
        let w1: Vec<f64> = nodes.iter().map(|nd| (-(c1t - nd.c1)).exp()).collect();
        let w2h: Vec<f64> =
            nodes.iter().map(|nd| (0.5 * ((c2t - nd.c2) - (c1t - nd.c1))).exp()).collect();

        let integrand: Vec<f64> = (0..=SEGMENTS)
            .map(|j| {
                let g = &nodes[j].g;
                (w2h[j] - 1.0) * g.norm_squared() + dot(g, &(wv[j] - gt * w1[j]))
            })
            .collect();
        let rhs3 = trapezoid(&integrand, dr);

        let rhs3p = if branches {
            let mut vals = Vec::with_capacity(SEGMENTS + 1);
            for (j, nd) in nodes.iter().enumerate() {
                let (wp, e) = if j == SEGMENTS {
                    (gt, w2h[j])
                } else {
                    let steps = (SEGMENTS - j) * m;
                    let mut brng = path_rng(mc.seed, i, BRANCH + j as u64);
                    let mut b = Walker::new(diff, nd.x, nd.u, nd.t, h, i).with_q(&curv);
                    for _ in 0..steps {
                        b.step(&mut brng)?;
                    }
                    let wp = b.q() * b.components(&f.gradient(&b.x));
                    let e = if w2h_random {
                        let mut erng = path_rng(mc.seed, i, BRANCH2 + j as u64);
                        let mut c = Walker::new(diff, nd.x, nd.u, nd.t, h, i);
                        let (mut a1, mut a2) = (0.0, 0.0);
                        for _ in 0..steps {
                            let rec = c.step(&mut erng)?;
                            a1 += lower.increment(&rec);
                            a2 += upper.increment(&rec);
                        }
                        (0.5 * (a2 - a1)).exp()
                    } else {
                        w2h[j]
                    };
                    (wp, e)
                };
                vals.push(e * dot(&wv[j], &wp) - dot(&wp, &(gt * w1[j])));
            }
            trapezoid(&vals, dr)
        } else {
            0.0
        };

        let fx = f.value(&w.x);
        if positivity && !(fx > 0.0) {
            return Err(Error::NonPositiveF(fx));
        }
        let weight_int = match k1_const {
            Some(k) => phi(k, tau),
            None => (-2.0 * c1t).exp() * e_int,
        };
        let gt2 = gt.norm_squared();
        let mut obs = vec![0.0; layout.len];
        for a in 0..d {
            obs[layout.g0 + a] = nodes[0].g[a];
            obs[layout.w0 + a] = wv[0][a];
            obs[layout.c + a] = w1[0] * gt[a];
        }
        obs[layout.w2h] = w2h[0];
        obs[layout.lhs_w] = (-2.0 * c1t).exp() * gt2;
        obs[layout.lhs_int] = weight_int * gt2;
        let f2 = fx * fx;
        obs[layout.f2] = f2;
        for &(q, idx) in &layout.fp {
            obs[idx] = if positivity { fx.powf(2.0 / q) } else { 0.0 };
        }
        obs[layout.ent] = if positivity { f2 * f2.ln() } else { 0.0 };
        obs[layout.rhs3] = rhs3;
        obs[layout.rhs3p] = rhs3p;
        obs[layout.moment] = (-2.5 * c1t).exp();
        Ok((obs, w.checksum()))
    })?;
    if !ens.moments.mean()[layout.moment].is_finite() {
        return Err(Error::MomentCheckFailed);
    }
    let flagged = ens.exclusion_fraction() > mc.exclusion_tol || !ens.all_finite();
    Ok(IneqEnsemble { ens, layout, theorem: p.theorem(), t: p.t, flagged, branches })
}
