//! Fixed-capacity vectors and matrices used by the stepping kernels.
//!
//! Chart points and tangent vectors live in `Vector`, zero padded past the
//! ambient dimension. Frames and d×d operators live in `Mat`; only the
//! leading block is meaningful and the padding is kept at zero so products
//! never leak into it.

use nalgebra::{DMatrix, SMatrix, SVector};

/// Largest ambient dimension a model may use.
pub const CAP: usize = 4;

pub type Vector = SVector<f64, CAP>;
pub type Mat = SMatrix<f64, CAP, CAP>;

pub fn vector_from(xs: &[f64]) -> Vector {
    assert!(xs.len() <= CAP, "vector longer than CAP");
    let mut v = Vector::zeros();
    for (i, x) in xs.iter().enumerate() {
        v[i] = *x;
    }
    v
}

pub fn to_vec(v: &Vector, n: usize) -> Vec<f64> {
    v.iter().take(n).copied().collect()
}

/// Identity on the leading d×d block, zero elsewhere.
pub fn eye(d: usize) -> Mat {
    let mut m = Mat::zeros();
    for i in 0..d {
        m[(i, i)] = 1.0;
    }
    m
}

pub fn block(m: &Mat, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| m[(i, j)])
}

pub fn from_block(b: &DMatrix<f64>) -> Mat {
    assert!(b.nrows() <= CAP && b.ncols() <= CAP);
    let mut m = Mat::zeros();
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            m[(i, j)] = b[(i, j)];
        }
    }
    m
}

/// Largest singular value of the leading d×d block.
pub fn op_norm(m: &Mat, d: usize) -> f64 {
    if d == 0 {
        return 0.0;
    }
    let b = block(m, d, d);
    b.singular_values().max()
}

/// If the leading block is `c·I` (exactly), return `c`.
pub fn scalar_part(m: &Mat, d: usize) -> Option<f64> {
    let c = m[(0, 0)];
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { c } else { 0.0 };
            if m[(i, j)] != want {
                return None;
            }
        }
    }
    Some(c)
}

/// `exp(-s·m)` on the leading block; padding stays zero.
pub fn expm_neg(m: &Mat, d: usize, s: f64) -> Mat {
    if let Some(c) = scalar_part(m, d) {
        return eye(d) * (-s * c).exp();
    }
    let b = block(m, d, d) * (-s);
    from_block(&b.exp())
}

/// Polar re-orthonormalisation of the first `d` columns of `u` for the
/// conformal metric `G = mu·I`, i.e. `u ← u (uᵀGu)^{-1/2}`.
///
/// Newton–Schulz iteration; the input is always within a few ulps (or one
/// step of metric scaling) of orthonormal, so a handful of sweeps converge.
pub fn orthonormalize(u: &mut Mat, d: usize, mu: f64) {
    let gram = |u: &Mat| -> Mat {
        let mut s = Mat::zeros();
        for i in 0..d {
            for j in i..d {
                let v = mu * u.column(i).dot(&u.column(j));
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    };
    let mut s = gram(u);
    let tr = (0..d).map(|i| s[(i, i)]).sum::<f64>() / d as f64;
    if (tr - 1.0).abs() > 1e-3 {
        *u /= tr.sqrt();
        s = gram(u);
    }
    for _ in 0..8 {
        let mut err = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let e = s[(i, j)] - if i == j { 1.0 } else { 0.0 };
                err = err.max(e.abs());
            }
        }
        if err < 1e-15 {
            break;
        }
        let mut corr = Mat::zeros();
        for i in 0..d {
            for j in 0..d {
                corr[(i, j)] = -0.5 * s[(i, j)];
            }
            corr[(i, i)] += 1.5;
        }
        *u *= corr;
        s = gram(u);
    }
}

/// Frame components `uᵀ G v` of an ambient vector for `G = mu·I`.
#[inline]
pub fn frame_components(u: &Mat, d: usize, mu: f64, v: &Vector) -> Vector {
    let mut out = Vector::zeros();
    for i in 0..d {
        out[i] = mu * u.column(i).dot(v);
    }
    out
}
