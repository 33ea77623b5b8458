use super::manifold::{ManifoldKind, ManifoldModel};
use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Quintic cutoff: 1 on `[0, 1/2]`, 0 on `[1, ∞)`, C² at both joins.
#[inline]
pub fn cutoff(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let u = 2.0 * s - 1.0;
        1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

#[inline]
pub fn cutoff_deriv(s: f64) -> f64 {
    if s <= 0.5 || s >= 1.0 {
        0.0
    } else {
        let u = 2.0 * s - 1.0;
        -60.0 * u * u * (1.0 - u) * (1.0 - u)
    }
}

/// `⟨X, log_x y⟩` times a cutoff in `ρ(x, y)`.
#[derive(Clone, Copy, Debug)]
struct Pinned {
    model: ManifoldModel,
    x: Vector,
    dir: Vector,
    r_c: f64,
}

impl Pinned {
    fn value(&self, y: &Vector) -> f64 {
        let Ok(v) = self.model.log_map(&self.x, y) else { return 0.0 };
        let rho = self.model.norm(&self.x, &v);
        if rho >= self.r_c {
            return 0.0;
        }
        self.model.inner(&self.x, &self.dir, &v) * cutoff(rho / self.r_c)
    }

    fn gradient(&self, y: &Vector) -> Vector {
        let m = &self.model;
        let Ok(v) = m.log_map(&self.x, y) else { return Vector::zeros() };
        let rho = m.norm(&self.x, &v);
        if rho >= self.r_c {
            return Vector::zeros();
        }
        if rho == 0.0 {
            return self.dir;
        }
        let xi = v / rho;
        let a = m.inner(&self.x, &self.dir, &xi);
        let f = a * rho;
        let s = rho / self.r_c;
        // Radial part is unstretched; the orthogonal part is the Jacobi-field
        // ratio ρ/sn(ρ).
        let jac = rho / m.sn(rho);
        let along = xi * a + (self.dir - xi * a) * jac;
        let b = along * cutoff(s) + xi * (f * cutoff_deriv(s) / self.r_c);
        m.transport_geodesic(&self.x, y, &b).unwrap_or_else(|_| Vector::zeros())
    }
}

/// Tangential pinned function at a boundary point, constant along the normal
/// near `∂M`, so that `Nf = 0` on the boundary.
#[derive(Clone, Copy, Debug)]
enum BoundaryPinned {
    HalfSpace { d: usize, x: Vector, dir: Vector, r_c: f64 },
    Ball { radius: f64, r_c: f64, on_sphere: Pinned },
}

impl BoundaryPinned {
    fn value(&self, y: &Vector) -> f64 {
        match self {
            BoundaryPinned::HalfSpace { d, x, dir, r_c } => {
                let (tan, h) = split_last(&(y - x), *d);
                dir.dot(&(y - x)) * cutoff(tan.norm() / r_c) * cutoff(h / r_c)
            }
            BoundaryPinned::Ball { radius, r_c, on_sphere } => {
                let r = y.norm();
                let psi = cutoff((radius - r) / r_c);
                if psi == 0.0 {
                    return 0.0;
                }
                on_sphere.value(&(y * (radius / r))) * psi
            }
        }
    }

    fn gradient(&self, y: &Vector) -> Vector {
        match self {
            BoundaryPinned::HalfSpace { d, x, dir, r_c } => {
                let (tan, h) = split_last(&(y - x), *d);
                let tn = tan.norm();
                let (c1, c2) = (cutoff(tn / r_c), cutoff(h / r_c));
                let f = dir.dot(&(y - x));
                let mut g = dir * (c1 * c2);
                if tn > 0.0 {
                    g += tan * (f * cutoff_deriv(tn / r_c) * c2 / (r_c * tn));
                }
                g[d - 1] += f * c1 * cutoff_deriv(h / r_c) / r_c;
                g
            }
            BoundaryPinned::Ball { radius, r_c, on_sphere } => {
                let r = y.norm();
                let s = (radius - r) / r_c;
                let psi = cutoff(s);
                if psi == 0.0 {
                    return Vector::zeros();
                }
                let yh = y / r;
                let z = yh * *radius;
                let tangential = on_sphere.gradient(&z) * (psi * radius / r);
                // ψ depends on r only; d/dr ψ((R−r)/r_c) = −ψ'/r_c.
                tangential - yh * (on_sphere.value(&z) * cutoff_deriv(s) / r_c)
            }
        }
    }
}

fn split_last(v: &Vector, d: usize) -> (Vector, f64) {
    let mut t = *v;
    let h = v[d - 1];
    t[d - 1] = 0.0;
    (t, h)
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Constant(f64),
    Linear(Vector),
    Sine { wave: Vector, phase: f64 },
    Pinned(Pinned),
    Boundary(BoundaryPinned),
}

/// Scalar test function with value and gradient oracles on one model.
///
/// Gradients are metric gradients for the model's (base) metric, expressed
/// as tangent vectors in chart coordinates.
#[derive(Clone, Copy, Debug)]
pub struct TestFunction {
    model: ManifoldModel,
    kind: Kind,
    offset: f64,
    pin: Option<(Vector, Vector)>,
}

impl TestFunction {
    pub fn constant(model: &ManifoldModel, c: f64) -> Self {
        Self { model: *model, kind: Kind::Constant(c), offset: 0.0, pin: None }
    }

    /// Restriction of the ambient linear function `y ↦ ⟨a, y⟩`.
    pub fn linear(model: &ManifoldModel, a: &[f64]) -> Result<Self> {
        let a = ambient_vector(model, a)?;
        Ok(Self { model: *model, kind: Kind::Linear(a), offset: 0.0, pin: None })
    }

    /// `y ↦ sin(⟨k, y⟩ + phase)`.
    pub fn sine(model: &ManifoldModel, wave: &[f64], phase: f64) -> Result<Self> {
        let wave = ambient_vector(model, wave)?;
        Ok(Self { model: *model, kind: Kind::Sine { wave, phase }, offset: 0.0, pin: None })
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `f + n`.
    pub fn with_offset(mut self, n: f64) -> Self {
        self.offset = n;
        self
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    /// Pin point and pinned gradient, when the function was built pinned.
    pub fn pin(&self) -> Option<(Vector, Vector)> {
        self.pin
    }

    pub fn value(&self, y: &Vector) -> f64 {
        self.offset
            + match &self.kind {
                Kind::Constant(c) => *c,
                Kind::Linear(a) => a.dot(y),
                Kind::Sine { wave, phase } => (wave.dot(y) + phase).sin(),
                Kind::Pinned(p) => p.value(y),
                Kind::Boundary(b) => b.value(y),
            }
    }

    pub fn gradient(&self, y: &Vector) -> Vector {
        match &self.kind {
            Kind::Constant(_) => Vector::zeros(),
            Kind::Linear(a) => self.ambient_gradient(y, a),
            Kind::Sine { wave, phase } => {
                self.ambient_gradient(y, &(wave * (wave.dot(y) + phase).cos()))
            }
            Kind::Pinned(p) => p.gradient(y),
            Kind::Boundary(b) => b.gradient(y),
        }
    }

    fn ambient_gradient(&self, y: &Vector, df: &Vector) -> Vector {
        self.model.project_tangent(y, df) / self.model.conformal_factor(y)
    }

    /// Second derivative of `s ↦ f(exp_y(s v))` at 0 by central differences;
    /// equals `Hess_f(v, v)`.
    pub fn hessian_fd(&self, y: &Vector, v: &Vector, eps: f64) -> Result<f64> {
        let p = self.model.exp_map(y, &(v * eps))?;
        let m = self.model.exp_map(y, &(v * -eps))?;
        Ok((self.value(&p) - 2.0 * self.value(y) + self.value(&m)) / (eps * eps))
    }
}

fn ambient_vector(model: &ManifoldModel, a: &[f64]) -> Result<Vector> {
    if a.len() != model.ambient_dim() {
        return Err(Error::InvalidArgument(format!(
            "coefficient vector must have length {}",
            model.ambient_dim()
        )));
    }
    Ok(crate::linalg::vector_from(a))
}

/// `f(y) = ⟨X, log_x y⟩ · χ(ρ(x,y)/r_c)` with the quintic cutoff χ.
///
/// `∇f(x) = X` exactly and `Hess_f(x) = 0`, since `f` is linear in normal
/// coordinates on the ball of radius `r_c/2`.
pub fn pinned_test_function(
    model: &ManifoldModel,
    x: &Vector,
    dir: &Vector,
    r_c: f64,
) -> Result<TestFunction> {
    model.check_point(x)?;
    let dir = model.project_tangent(x, dir);
    if model.norm(x, &dir) == 0.0 {
        return Err(Error::InvalidArgument("pinned direction must be non-zero".into()));
    }
    if !(r_c > 0.0) {
        return Err(Error::InvalidArgument("cutoff radius must be positive".into()));
    }
    let limit = model.injectivity_radius().min(model.distance_to_boundary(x));
    if r_c >= limit {
        return Err(Error::CutoffTooLarge { r_c, limit });
    }
    let p = Pinned { model: *model, x: *x, dir, r_c };
    Ok(TestFunction { model: *model, kind: Kind::Pinned(p), offset: 0.0, pin: Some((*x, dir)) })
}

/// Pinned function at a boundary point `x` with tangential direction `X`,
/// satisfying the Neumann condition `Nf = 0` on `∂M`.
pub fn boundary_test_function(
    model: &ManifoldModel,
    x: &Vector,
    dir: &Vector,
    r_c: f64,
) -> Result<TestFunction> {
    let data = model.boundary_data(x)?;
    if dir.dot(&data.normal).abs() > 1e-12 * dir.norm().max(1.0) {
        return Err(Error::InvalidArgument("direction must be tangent to the boundary".into()));
    }
    if dir.norm() == 0.0 {
        return Err(Error::InvalidArgument("pinned direction must be non-zero".into()));
    }
    if !(r_c > 0.0) {
        return Err(Error::InvalidArgument("cutoff radius must be positive".into()));
    }
    let d = model.dim();
    let kind = match model.kind() {
        ManifoldKind::HalfSpace => BoundaryPinned::HalfSpace { d, x: *x, dir: *dir, r_c },
        ManifoldKind::EuclideanBall { radius } => {
            if d < 2 {
                return Err(Error::UnsupportedDimension(d));
            }
            if r_c >= radius {
                return Err(Error::CutoffTooLarge { r_c, limit: radius });
            }
            let sphere = ManifoldModel::sphere(d - 1, radius)?;
            BoundaryPinned::Ball {
                radius,
                r_c,
                on_sphere: Pinned { model: sphere, x: *x, dir: *dir, r_c },
            }
        }
        _ => return Err(Error::NotABoundaryPoint),
    };
    Ok(TestFunction { model: *model, kind: Kind::Boundary(kind), offset: 0.0, pin: Some((*x, *dir)) })
}
