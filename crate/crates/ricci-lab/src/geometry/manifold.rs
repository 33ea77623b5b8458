use nalgebra::DMatrix;

use super::mobius;
use crate::error::{Error, Result};
use crate::linalg::{eye, Mat, Vector, CAP};

/// The catalog of model spaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ManifoldKind {
    Euclidean,
    /// Product of circles; coordinates are kept in `[0, period)`.
    FlatTorus { periods: Vector },
    /// Round sphere of radius `radius`, in embedding coordinates of R^{d+1}.
    Sphere { radius: f64 },
    /// Poincaré ball with metric `4a²|dx|²/(1−|x|²)²`, sectional curvature `−1/a²`.
    Hyperbolic { scale: f64 },
    EuclideanBall { radius: f64 },
    /// `{x : x_d ≥ 0}` with inward normal `e_d`.
    HalfSpace,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManifoldModel {
    kind: ManifoldKind,
    dim: usize,
}

/// Geometry of the boundary at one point.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryData {
    /// Inward unit normal.
    pub normal: Vector,
    /// Second fundamental form as an endomorphism of the ambient space; it
    /// vanishes on the normal line.
    pub second_fundamental: Mat,
    /// Rank-one projector `N ⊗ N`.
    pub projector: Mat,
    /// Both catalog boundaries are umbilic: `II = umbilic · id` on `T∂M`.
    pub umbilic: f64,
}

/// Christoffel symbols `Γ^k_{ij}` in chart (or embedding) coordinates.
#[derive(Clone, Debug)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[(k * self.n + i) * self.n + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    /// `Γ(a, b)^k = Γ^k_{ij} a^i b^j`.
    pub fn contract(&self, a: &Vector, b: &Vector) -> Vector {
        let mut out = Vector::zeros();
        for k in 0..self.n {
            let mut s = 0.0;
            for i in 0..self.n {
                for j in 0..self.n {
                    s += self.get(k, i, j) * a[i] * b[j];
                }
            }
            out[k] = s;
        }
        out
    }
}

fn check_dim(d: usize, ambient: usize) -> Result<()> {
    if d == 0 || ambient > CAP {
        return Err(Error::UnsupportedDimension(d));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

impl ManifoldModel {
    pub fn euclidean(d: usize) -> Result<Self> {
        check_dim(d, d)?;
        Ok(Self { kind: ManifoldKind::Euclidean, dim: d })
    }

    pub fn flat_torus(periods: &[f64]) -> Result<Self> {
        let d = periods.len();
        check_dim(d, d)?;
        for p in periods {
            positive("torus period", *p)?;
        }
        Ok(Self {
            kind: ManifoldKind::FlatTorus { periods: crate::linalg::vector_from(periods) },
            dim: d,
        })
    }

    pub fn sphere(d: usize, radius: f64) -> Result<Self> {
        check_dim(d, d + 1)?;
        positive("sphere radius", radius)?;
        Ok(Self { kind: ManifoldKind::Sphere { radius }, dim: d })
    }

    pub fn hyperbolic(d: usize, scale: f64) -> Result<Self> {
        check_dim(d, d)?;
        positive("hyperbolic scale", scale)?;
        Ok(Self { kind: ManifoldKind::Hyperbolic { scale }, dim: d })
    }

    pub fn ball(d: usize, radius: f64) -> Result<Self> {
        check_dim(d, d)?;
        positive("ball radius", radius)?;
        Ok(Self { kind: ManifoldKind::EuclideanBall { radius }, dim: d })
    }

    pub fn half_space(d: usize) -> Result<Self> {
        check_dim(d, d)?;
        Ok(Self { kind: ManifoldKind::HalfSpace, dim: d })
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of chart coordinates (d + 1 for the embedded sphere).
    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Sphere { .. } => self.dim + 1,
            _ => self.dim,
        }
    }

    pub fn has_boundary(&self) -> bool {
        matches!(self.kind, ManifoldKind::EuclideanBall { .. } | ManifoldKind::HalfSpace)
    }

    pub fn is_flat(&self) -> bool {
        !matches!(self.kind, ManifoldKind::Sphere { .. } | ManifoldKind::Hyperbolic { .. })
    }

    /// Constant sectional curvature κ; `Ric = (d−1)κ g`.
    pub fn sectional_curvature(&self) -> f64 {
        match self.kind {
            ManifoldKind::Sphere { radius } => 1.0 / (radius * radius),
            ManifoldKind::Hyperbolic { scale } => -1.0 / (scale * scale),
            _ => 0.0,
        }
    }

    pub fn injectivity_radius(&self) -> f64 {
        match self.kind {
            ManifoldKind::Sphere { radius } => std::f64::consts::PI * radius,
            ManifoldKind::FlatTorus { periods } => {
                0.5 * (0..self.dim).map(|i| periods[i]).fold(f64::INFINITY, f64::min)
            }
            _ => f64::INFINITY,
        }
    }

    /// Every catalog metric is conformally flat in its chart: `G(x) = μ(x)·I`.
    #[inline]
    pub fn conformal_factor(&self, x: &Vector) -> f64 {
        match self.kind {
            ManifoldKind::Hyperbolic { scale } => {
                let l = mobius::lambda(x) * scale;
                l * l
            }
            _ => 1.0,
        }
    }

    /// `sn_κ(ρ)`, the length scale of Jacobi fields along unit geodesics.
    pub fn sn(&self, rho: f64) -> f64 {
        match self.kind {
            ManifoldKind::Sphere { radius } => radius * (rho / radius).sin(),
            ManifoldKind::Hyperbolic { scale } => scale * (rho / scale).sinh(),
            _ => rho,
        }
    }

    pub fn check_point(&self, x: &Vector) -> Result<()> {
        let n = self.ambient_dim();
        if (0..CAP).any(|i| !x[i].is_finite() || (i >= n && x[i] != 0.0)) {
            return Err(Error::PointOutsideChart(format!("{:?}", &x.as_slice()[..n])));
        }
        let ok = match self.kind {
            ManifoldKind::Sphere { radius } => (x.norm() - radius).abs() <= 1e-8 * radius,
            ManifoldKind::Hyperbolic { .. } => x.norm_squared() < 1.0,
            ManifoldKind::EuclideanBall { radius } => x.norm() <= radius * (1.0 + 1e-12),
            ManifoldKind::HalfSpace => x[self.dim - 1] >= -1e-12,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::PointOutsideChart(format!("{:?}", &x.as_slice()[..n])))
        }
    }

    /// Metric matrix in chart coordinates (ambient coordinates for the sphere,
    /// where the induced metric is the restriction of the returned identity).
    pub fn metric_at(&self, x: &Vector) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let n = self.ambient_dim();
        Ok(DMatrix::identity(n, n) * self.conformal_factor(x))
    }

    /// Christoffel symbols. For the sphere these are the embedding
    /// (Gauss-formula) symbols `Γ^k_{ij} = x^k δ_{ij}/R²`, valid on tangent
    /// vectors: they turn `ẍ + Γ(ẋ,ẋ) = 0` into the great-circle equation.
    pub fn christoffel_at(&self, x: &Vector) -> Result<Christoffel> {
        self.check_point(x)?;
        let n = self.ambient_dim();
        let mut g = Christoffel::zeros(n);
        match self.kind {
            ManifoldKind::Hyperbolic { .. } => {
                let den = 1.0 - x.norm_squared();
                let phi: Vec<f64> = (0..n).map(|i| 2.0 * x[i] / den).collect();
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            let mut v = 0.0;
                            if i == k {
                                v += phi[j];
                            }
                            if j == k {
                                v += phi[i];
                            }
                            if i == j {
                                v -= phi[k];
                            }
                            g.set(k, i, j, v);
                        }
                    }
                }
            }
            ManifoldKind::Sphere { radius } => {
                for k in 0..n {
                    for i in 0..n {
                        g.set(k, i, i, x[k] / (radius * radius));
                    }
                }
            }
            _ => {}
        }
        Ok(g)
    }

    #[inline]
    pub fn inner(&self, x: &Vector, a: &Vector, b: &Vector) -> f64 {
        self.conformal_factor(x) * a.dot(b)
    }

    #[inline]
    pub fn norm(&self, x: &Vector, v: &Vector) -> f64 {
        self.inner(x, v, v).sqrt()
    }

    /// Orthogonal projection of an ambient vector onto `T_xM`.
    #[inline]
    pub fn project_tangent(&self, x: &Vector, v: &Vector) -> Vector {
        match self.kind {
            ManifoldKind::Sphere { radius } => v - x * (x.dot(v) / (radius * radius)),
            _ => *v,
        }
    }

    pub fn wrap(&self, x: &Vector) -> Vector {
        match self.kind {
            ManifoldKind::FlatTorus { periods } => {
                let mut y = *x;
                for i in 0..self.dim {
                    y[i] = x[i].rem_euclid(periods[i]);
                    if y[i] >= periods[i] {
                        y[i] = 0.0;
                    }
                }
                y
            }
            _ => *x,
        }
    }

    pub fn exp_map(&self, x: &Vector, v: &Vector) -> Result<Vector> {
        self.check_point(x)?;
        Ok(match self.kind {
            ManifoldKind::Sphere { radius } => sphere_exp(x, &self.project_tangent(x, v), radius).0,
            ManifoldKind::Hyperbolic { .. } => {
                let y = mobius::exp(x, v);
                if !(y.norm_squared() < 1.0) {
                    return Err(Error::PointOutsideChart("exp_map left the Poincaré ball".into()));
                }
                y
            }
            ManifoldKind::FlatTorus { .. } => self.wrap(&(x + v)),
            _ => x + v,
        })
    }

    pub fn log_map(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.check_point(x)?;
        self.check_point(y)?;
        match self.kind {
            ManifoldKind::Sphere { radius } => sphere_log(x, y, radius),
            ManifoldKind::Hyperbolic { .. } => Ok(mobius::log(x, y)),
            ManifoldKind::FlatTorus { periods } => {
                let mut v = y - x;
                for i in 0..self.dim {
                    let p = periods[i];
                    v[i] -= p * (v[i] / p).round();
                    if v[i].abs() >= 0.5 * p * (1.0 - 1e-12) {
                        return Err(Error::OutsideInjectivityRadius);
                    }
                }
                Ok(v)
            }
            _ => Ok(y - x),
        }
    }

    pub fn distance(&self, x: &Vector, y: &Vector) -> Result<f64> {
        match self.kind {
            ManifoldKind::Hyperbolic { scale } => {
                self.check_point(x)?;
                self.check_point(y)?;
                Ok(scale * mobius::dist(x, y))
            }
            ManifoldKind::Sphere { radius } => {
                self.check_point(x)?;
                self.check_point(y)?;
                let c = x.dot(y) / (radius * radius);
                let s = (y / radius - x * (c / radius)).norm();
                Ok(radius * s.atan2(c))
            }
            _ => {
                let v = self.log_map(x, y)?;
                Ok(self.norm(x, &v))
            }
        }
    }

    /// Parallel transport of `v ∈ T_xM` along the minimising geodesic to `y`.
    pub fn transport_geodesic(&self, x: &Vector, y: &Vector, v: &Vector) -> Result<Vector> {
        match self.kind {
            ManifoldKind::Sphere { radius } => {
                let w = self.log_map(x, y)?;
                let n = w.norm();
                if n == 0.0 {
                    return Ok(self.project_tangent(x, v));
                }
                let e = w / n;
                Ok(sphere_transport(&(x / radius), &e, n / radius, &self.project_tangent(x, v)))
            }
            ManifoldKind::Hyperbolic { .. } => {
                self.check_point(x)?;
                self.check_point(y)?;
                Ok(mobius::transport(x, y, v))
            }
            _ => {
                self.log_map(x, y)?;
                Ok(*v)
            }
        }
    }

    /// Deterministic orthonormal frame of `T_xM`, one column per direction.
    pub fn canonical_frame(&self, x: &Vector) -> Mat {
        match self.kind {
            ManifoldKind::Sphere { radius } => {
                // Householder reflection taking e_n to ±x̂; its first d columns
                // span x̂^⊥.
                let n = self.dim + 1;
                let xh = x / radius;
                let sign = if xh[n - 1] >= 0.0 { 1.0 } else { -1.0 };
                let mut w = xh;
                w[n - 1] += sign;
                let w2 = w.norm_squared();
                let mut u = Mat::zeros();
                for j in 0..self.dim {
                    let mut col = Vector::zeros();
                    col[j] = 1.0;
                    col -= w * (2.0 * w[j] / w2);
                    u.set_column(j, &col);
                }
                u
            }
            _ => eye(self.dim) / self.conformal_factor(x).sqrt(),
        }
    }

    /// Distance to the boundary (infinite when there is none).
    pub fn distance_to_boundary(&self, x: &Vector) -> f64 {
        match self.kind {
            ManifoldKind::EuclideanBall { radius } => radius - x.norm(),
            ManifoldKind::HalfSpace => x[self.dim - 1],
            _ => f64::INFINITY,
        }
    }

    pub fn boundary_data(&self, x: &Vector) -> Result<BoundaryData> {
        let n = self.dim;
        match self.kind {
            ManifoldKind::EuclideanBall { radius } => {
                if (x.norm() - radius).abs() > 1e-9 * radius {
                    return Err(Error::NotABoundaryPoint);
                }
                let normal = -x / x.norm();
                Ok(umbilic_data(normal, 1.0 / radius, n))
            }
            ManifoldKind::HalfSpace => {
                if x[n - 1].abs() > 1e-12 {
                    return Err(Error::NotABoundaryPoint);
                }
                let mut normal = Vector::zeros();
                normal[n - 1] = 1.0;
                Ok(umbilic_data(normal, 0.0, n))
            }
            _ => Err(Error::NotABoundaryPoint),
        }
    }

    /// Projects a proposed point back onto the closed domain along the normal.
    /// Returns the projected point, the pushback distance and the inward
    /// normal there, or `None` if `y` is already inside.
    #[inline]
    pub fn reflect(&self, y: &Vector) -> Option<(Vector, f64, Vector)> {
        match self.kind {
            ManifoldKind::EuclideanBall { radius } => {
                let r = y.norm();
                if r <= radius {
                    return None;
                }
                let p = y * (radius / r);
                Some((p, r - radius, -p / radius))
            }
            ManifoldKind::HalfSpace => {
                let k = self.dim - 1;
                if y[k] >= 0.0 {
                    return None;
                }
                let mut p = *y;
                let dl = -y[k];
                p[k] = 0.0;
                let mut normal = Vector::zeros();
                normal[k] = 1.0;
                Some((p, dl, normal))
            }
            _ => None,
        }
    }

    /// Second fundamental form scale of the (umbilic) boundary.
    pub fn boundary_umbilic(&self) -> f64 {
        match self.kind {
            ManifoldKind::EuclideanBall { radius } => 1.0 / radius,
            _ => 0.0,
        }
    }
}

fn umbilic_data(normal: Vector, sigma: f64, n: usize) -> BoundaryData {
    let projector = normal * normal.transpose();
    let second_fundamental = (eye(n) - projector) * sigma;
    BoundaryData { normal, second_fundamental, projector, umbilic: sigma }
}

/// Great-circle step; returns the endpoint, the unit direction and the angle.
#[inline]
pub(crate) fn sphere_exp(x: &Vector, v: &Vector, radius: f64) -> (Vector, Vector, f64) {
    let n = v.norm();
    if n == 0.0 {
        return (*x, Vector::zeros(), 0.0);
    }
    let e = v / n;
    let theta = n / radius;
    let (s, c) = theta.sin_cos();
    let mut y = x * c + e * (radius * s);
    y *= radius / y.norm();
    (y, e, theta)
}

/// Transport along the great circle leaving `x̂` (unit) in direction `e` for angle `θ`.
#[inline]
pub(crate) fn sphere_transport(xh: &Vector, e: &Vector, theta: f64, w: &Vector) -> Vector {
    let (s, c) = theta.sin_cos();
    let a = e.dot(w);
    w + (e * (c - 1.0) - xh * s) * a
}

fn sphere_log(x: &Vector, y: &Vector, radius: f64) -> Result<Vector> {
    let xh = x / radius;
    let yh = y / radius;
    let c = xh.dot(&yh);
    let w = yh - xh * c;
    let s = w.norm();
    if s < 1e-12 && c < 0.0 {
        return Err(Error::OutsideInjectivityRadius);
    }
    if s == 0.0 {
        return Ok(Vector::zeros());
    }
    let theta = s.atan2(c);
    Ok(w * (radius * theta / s))
}
