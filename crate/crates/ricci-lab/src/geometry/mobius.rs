//! Möbius gyrovector operations on the open unit ball (curvature −1 chart).

use crate::linalg::Vector;

#[inline]
pub fn lambda(x: &Vector) -> f64 {
    2.0 / (1.0 - x.norm_squared())
}

pub fn add(a: &Vector, b: &Vector) -> Vector {
    let ab = a.dot(b);
    let a2 = a.norm_squared();
    let b2 = b.norm_squared();
    let num = a * (1.0 + 2.0 * ab + b2) + b * (1.0 - a2);
    num / (1.0 + 2.0 * ab + a2 * b2)
}

/// Gyration `gyr[u, v] w`, linear in `w`.
pub fn gyr(u: &Vector, v: &Vector, w: &Vector) -> Vector {
    let uv = u.dot(v);
    let uw = u.dot(w);
    let vw = v.dot(w);
    let u2 = u.norm_squared();
    let v2 = v.norm_squared();
    let a = -uw * v2 + vw + 2.0 * uv * vw;
    let b = -vw * u2 - uw;
    let d = 1.0 + 2.0 * uv + u2 * v2;
    w + (u * a + v * b) * (2.0 / d)
}

pub fn exp(x: &Vector, v: &Vector) -> Vector {
    let n = v.norm();
    if n == 0.0 {
        return *x;
    }
    let s = (0.5 * lambda(x) * n).tanh();
    add(x, &(v * (s / n)))
}

pub fn log(x: &Vector, y: &Vector) -> Vector {
    let w = add(&(-x), y);
    let n = w.norm();
    if n == 0.0 {
        return Vector::zeros();
    }
    w * (2.0 / lambda(x) * n.atanh() / n)
}

/// Distance for the unit-scale metric `4|dx|²/(1−|x|²)²`.
pub fn dist(x: &Vector, y: &Vector) -> f64 {
    2.0 * add(&(-x), y).norm().atanh()
}

/// `cosh` of the unit-scale distance; cheap, used by the divergence guard.
pub fn cosh_dist(x: &Vector, y: &Vector) -> f64 {
    let d2 = (x - y).norm_squared();
    let den = (1.0 - x.norm_squared()) * (1.0 - y.norm_squared());
    1.0 + 2.0 * d2 / den
}

/// Parallel transport from `x` to `y` along the connecting geodesic.
pub fn transport(x: &Vector, y: &Vector, v: &Vector) -> Vector {
    gyr(y, &(-x), v) * (lambda(x) / lambda(y))
}
