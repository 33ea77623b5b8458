use std::f64::consts::SQRT_2;

use super::evolving::{EvolvingMetric, ScaleFamily};
use crate::error::{Error, Result};
use crate::geometry::{
    mobius, ricci_z_frame, sphere_exp, sphere_transport, AffineDrift, DriftField, ManifoldKind,
    ManifoldModel,
};
use crate::linalg::{expm_neg, eye, orthonormalize, Mat, Vector};

/// Default guard radius for the lifetime cutoff `ζ_n`.
pub const DEFAULT_GUARD: f64 = 50.0;

/// The diffusion generated by `Δ_{g_t} + Z` on one model space.
#[derive(Clone, Debug)]
pub struct Diffusion {
    metric: EvolvingMetric,
    field: DriftField,
    drift: AffineDrift,
    guard: f64,
}

impl Diffusion {
    pub fn new(model: ManifoldModel, field: DriftField) -> Result<Self> {
        Self::evolving(EvolvingMetric::fixed(model), field)
    }

    pub fn evolving(metric: EvolvingMetric, field: DriftField) -> Result<Self> {
        let drift = field.affine(&metric.base)?;
        if !metric.scale.is_static() && metric.base.has_boundary() {
            return Err(Error::InvalidArgument(
                "evolving metrics are only supported without boundary".into(),
            ));
        }
        Ok(Self { metric, field, drift, guard: DEFAULT_GUARD })
    }

    pub fn with_guard(mut self, n: f64) -> Self {
        self.guard = n;
        self
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.metric.base
    }

    pub fn metric(&self) -> &EvolvingMetric {
        &self.metric
    }

    pub fn drift_field(&self) -> &DriftField {
        &self.field
    }

    pub fn drift(&self) -> &AffineDrift {
        &self.drift
    }

    pub fn guard_radius(&self) -> f64 {
        self.guard
    }

    pub fn scale(&self) -> ScaleFamily {
        self.metric.scale
    }

    pub fn is_static(&self) -> bool {
        self.metric.scale.is_static()
    }

    pub fn dim(&self) -> usize {
        self.metric.base.dim()
    }

    /// Rejects steps whose typical displacement `√(2h)` exceeds a tenth of
    /// the injectivity radius.
    pub fn check_step(&self, h: f64) -> Result<()> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
        }
        let inj = self.metric.base.injectivity_radius();
        if (2.0 * h).sqrt() > 0.1 * inj {
            return Err(Error::StepTooLarge { h, inj });
        }
        Ok(())
    }

    /// Canonical frame at `x`, orthonormal for `g_t`.
    pub fn frame_at(&self, x: &Vector, t: f64) -> Mat {
        self.metric.base.canonical_frame(x) / self.metric.scale.c(t).sqrt()
    }

    /// Frame components `uᵀ G_t ∇^t f` of the `g_t`-gradient. They equal
    /// `c·uᵀ G ∇f / c`, so the base gradient can be used directly.
    #[inline]
    pub fn components(&self, x: &Vector, u: &Mat, base_grad: &Vector) -> Vector {
        crate::linalg::frame_components(u, self.dim(), self.metric.base.conformal_factor(x), base_grad)
    }

    pub fn curvature(&self) -> ModelCurvature {
        ModelCurvature { model: self.metric.base, drift: self.drift, scale: self.metric.scale }
    }
}

/// Source of the endomorphism that damps `Q`, in frame coordinates.
pub trait CurvatureOracle: Send + Sync {
    fn endo(&self, t: f64, x: &Vector, u: &Mat) -> Mat;
}

/// `Ric^Z`, or `Ric_t − ∇ᵗZ − ½∂_t g_t` for an evolving metric, from the
/// closed-form curvature of the model.
#[derive(Clone, Copy, Debug)]
pub struct ModelCurvature {
    model: ManifoldModel,
    drift: AffineDrift,
    scale: ScaleFamily,
}

impl CurvatureOracle for ModelCurvature {
    #[inline]
    fn endo(&self, t: f64, x: &Vector, u: &Mat) -> Mat {
        let r = ricci_z_frame(&self.model, &self.drift, x, u);
        if self.scale.is_static() {
            return r;
        }
        // In a g_t-orthonormal frame Ric_t contributes (d−1)κ/c, −½∂_t g
        // contributes −½c'/c, and the drift's frame matrix picks up a factor c.
        let d = self.model.dim();
        let c = self.scale.c(t);
        let ric = (d as f64 - 1.0) * self.model.sectional_curvature();
        let drift_part = (eye(d) * ric - r) * c;
        eye(d) * ((ric - 0.5 * self.scale.dc(t)) / c) - drift_part
    }
}

/// A fixed frame matrix, independent of time and position.
#[derive(Clone, Copy, Debug)]
pub struct ConstantCurvature(pub Mat);

impl CurvatureOracle for ConstantCurvature {
    fn endo(&self, _t: f64, _x: &Vector, _u: &Mat) -> Mat {
        self.0
    }
}

/// Factor applied to `Q` on a reflection step: `exp(−Δl II)(I − P)` in the
/// frame, with `II = σ(I − P)` umbilic so that both factors commute and the
/// product is `e^{−σΔl}(I − P)`.
#[inline]
pub fn boundary_factor(u: &Mat, d: usize, normal: &Vector, sigma: f64, dl: f64) -> Mat {
    let mut n = Vector::zeros();
    for i in 0..d {
        n[i] = u.column(i).dot(normal);
    }
    (eye(d) - n * n.transpose()) * (-sigma * dl).exp()
}

/// One completed step.
#[derive(Clone, Copy, Debug)]
pub struct StepRecord {
    pub t0: f64,
    pub h: f64,
    pub x0: Vector,
    pub x1: Vector,
    /// Local-time increment (pushback distance); zero without reflection.
    pub dl: f64,
    /// Inward normal at the reflection point, when the step reflected.
    pub normal: Option<Vector>,
}

#[derive(Clone, Copy, Debug)]
struct ExpCache {
    key: Mat,
    val: Mat,
}

/// Geodesic Euler–Maruyama integrator for one path on the frame bundle,
/// with optional accumulation of the damped transport `Q`.
pub struct Walker<'a> {
    diff: &'a Diffusion,
    oracle: Option<&'a dyn CurvatureOracle>,
    pub x: Vector,
    pub u: Mat,
    pub t: f64,
    h: f64,
    start: Vector,
    path_index: u64,
    guard_cosh: f64,
    q: Mat,
    cache: Option<ExpCache>,
    sigma: f64,
    pub local_time: f64,
    checksum: u64,
    orthonormalize: bool,
}

impl<'a> Walker<'a> {
    /// Starts at `(x, u)` at time `t`; `u` must be `g_t`-orthonormal.
    pub fn new(diff: &'a Diffusion, x: Vector, u: Mat, t: f64, h: f64, path_index: u64) -> Self {
        let model = diff.model();
        let guard_cosh = match model.kind() {
            ManifoldKind::Hyperbolic { scale } => (diff.guard / scale).cosh(),
            _ => f64::INFINITY,
        };
        let curved = !model.is_flat();
        Self {
            diff,
            oracle: None,
            x,
            u,
            t,
            h,
            start: x,
            path_index,
            guard_cosh,
            q: eye(model.dim()),
            cache: None,
            sigma: model.boundary_umbilic(),
            local_time: 0.0,
            checksum: 0,
            orthonormalize: curved || !diff.is_static(),
        }
    }

    /// Track `Q` driven by `oracle` from now on.
    pub fn with_q(mut self, oracle: &'a dyn CurvatureOracle) -> Self {
        self.oracle = Some(oracle);
        self
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Q accumulated since the last call (or since the start); resets to I.
    pub fn take_q(&mut self) -> Mat {
        std::mem::replace(&mut self.q, eye(self.diff.dim()))
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }

    /// Order-sensitive hash of every increment consumed so far.
    pub fn checksum(&self) -> u64 {
        self.checksum
    }

    /// Frame components of the gradient of `f` at the current point.
    #[inline]
    pub fn components(&self, base_grad: &Vector) -> Vector {
        self.diff.components(&self.x, &self.u, base_grad)
    }

    pub fn step<R: rand::Rng>(&mut self, rng: &mut R) -> Result<StepRecord> {
        let db = crate::rng::normals(rng, self.diff.dim()) * self.h.sqrt();
        self.step_with(&db)
    }

    /// Advances by one step with Brownian increment `db` (frame components).
    pub fn step_with(&mut self, db: &Vector) -> Result<StepRecord> {
        let model = self.diff.model();
        let d = model.dim();
        let h = self.h;
        let t0 = self.t;
        let x0 = self.x;
        for i in 0..d {
            self.checksum = self.checksum.rotate_left(5) ^ db[i].to_bits();
        }

        if let Some(oracle) = self.oracle {
            let r = oracle.endo(t0 + 0.5 * h, &x0, &self.u);
            let e = match &self.cache {
                Some(c) if c.key == r => c.val,
                _ => {
                    let val = expm_neg(&r, d, h);
                    self.cache = Some(ExpCache { key: r, val });
                    val
                }
            };
            self.q *= e;
        }

        let mut v = self.u * db * SQRT_2;
        if !self.diff.drift.zero {
            v += self.diff.drift.value(&x0) * h;
        }

        let mut y = match model.kind() {
            ManifoldKind::Sphere { radius } => {
                let v = model.project_tangent(&x0, &v);
                let (y, e, theta) = sphere_exp(&x0, &v, radius);
                if theta > 0.0 {
                    let xh = x0 / radius;
                    for i in 0..d {
                        let col = sphere_transport(&xh, &e, theta, &self.u.column(i).into());
                        let col = col - y * (y.dot(&col) / (radius * radius));
                        self.u.set_column(i, &col);
                    }
                }
                y
            }
            ManifoldKind::Hyperbolic { .. } => {
                let y = mobius::exp(&x0, &v);
                if !(y.norm_squared() < 1.0) {
                    return Err(self.diverged());
                }
                for i in 0..d {
                    let col = mobius::transport(&x0, &y, &self.u.column(i).into());
                    self.u.set_column(i, &col);
                }
                y
            }
            ManifoldKind::FlatTorus { .. } => model.wrap(&(x0 + v)),
            _ => x0 + v,
        };

        let mut dl = 0.0;
        let mut normal = None;
        if let Some((p, push, n)) = model.reflect(&y) {
            y = p;
            dl = push;
            normal = Some(n);
            self.local_time += push;
            if self.oracle.is_some() {
                self.q *= boundary_factor(&self.u, d, &n, self.sigma, push);
            }
        }

        self.x = y;
        self.t = t0 + h;
        if self.orthonormalize {
            let mu = model.conformal_factor(&y) * self.diff.metric.scale.c(self.t);
            orthonormalize(&mut self.u, d, mu);
        }
        self.check_guard()?;
        Ok(StepRecord { t0, h, x0, x1: y, dl, normal })
    }

    fn diverged(&self) -> Error {
        Error::DivergedPath { path_index: self.path_index, t: self.t + self.h }
    }

    fn check_guard(&self) -> Result<()> {
        if !self.x.iter().all(|v| v.is_finite()) || !self.u.iter().all(|v| v.is_finite()) {
            return Err(self.diverged());
        }
        let model = self.diff.model();
        let out = match model.kind() {
            ManifoldKind::Hyperbolic { .. } => mobius::cosh_dist(&self.start, &self.x) > self.guard_cosh,
            ManifoldKind::Euclidean | ManifoldKind::HalfSpace => {
                (self.x - self.start).norm() * self.diff.metric.scale.c(self.t).sqrt() > self.diff.guard
            }
            _ => false,
        };
        if out {
            Err(Error::DivergedPath { path_index: self.path_index, t: self.t })
        } else {
            Ok(())
        }
    }
}
