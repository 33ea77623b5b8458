use serde::{Deserialize, Serialize};

use super::manifold::ManifoldModel;
use crate::error::{Error, Result};
use crate::linalg::{eye, Mat, Vector};

/// The first-order part `Z` of `L = Δ + Z`.
///
/// Every non-zero drift in the catalog is affine in chart coordinates,
/// `Z(x) = A x + b`, and lives on a flat model, so `∇Z = A` everywhere.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftField {
    #[default]
    Zero,
    /// `Z(x) = −λ x`.
    LinearOu { lambda: f64 },
    /// `Z = −∇V` for `V(x) = ½ (x−c)ᵀ H (x−c)`, so `Ric^Z = H`.
    GradPotential { hessian: Vec<Vec<f64>>, center: Vec<f64> },
    /// `Z(x) = A x + b`.
    Custom { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
}

/// Affine form `(A, b)` of a drift, ready for the stepping kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineDrift {
    pub a: Mat,
    pub b: Vector,
    pub zero: bool,
}

impl AffineDrift {
    #[inline]
    pub fn value(&self, x: &Vector) -> Vector {
        self.a * x + self.b
    }
}

fn square(m: &[Vec<f64>], d: usize, what: &str) -> Result<Mat> {
    if m.len() != d || m.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidArgument(format!("{what} must be {d}x{d}")));
    }
    let mut out = Mat::zeros();
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = m[i][j];
        }
    }
    Ok(out)
}

fn vec_of(v: &[f64], d: usize, what: &str) -> Result<Vector> {
    if v.len() != d {
        return Err(Error::InvalidArgument(format!("{what} must have length {d}")));
    }
    Ok(crate::linalg::vector_from(v))
}

impl DriftField {
    pub fn is_zero(&self) -> bool {
        matches!(self, DriftField::Zero)
    }

    /// Validates the drift against `m` and returns its affine form.
    pub fn affine(&self, m: &ManifoldModel) -> Result<AffineDrift> {
        let d = m.dim();
        if !self.is_zero() && !m.is_flat() {
            return Err(Error::InvalidArgument("non-zero drifts require a flat model".into()));
        }
        let (a, b) = match self {
            DriftField::Zero => (Mat::zeros(), Vector::zeros()),
            DriftField::LinearOu { lambda } => (eye(d) * -*lambda, Vector::zeros()),
            DriftField::GradPotential { hessian, center } => {
                let h = square(hessian, d, "hessian")?;
                if (h - h.transpose()).abs().max() > 1e-12 {
                    return Err(Error::InvalidArgument("hessian must be symmetric".into()));
                }
                let c = vec_of(center, d, "center")?;
                (-h, h * c)
            }
            DriftField::Custom { matrix, offset } => {
                (square(matrix, d, "matrix")?, vec_of(offset, d, "offset")?)
            }
        };
        if matches!(m.kind(), super::ManifoldKind::FlatTorus { .. }) && !self.is_zero() {
            return Err(Error::InvalidArgument("affine drifts are not periodic on the torus".into()));
        }
        Ok(AffineDrift { a, b, zero: self.is_zero() })
    }
}
