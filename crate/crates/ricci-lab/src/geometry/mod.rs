//! Analytic oracles for the model spaces.

mod drift;
mod manifold;
pub mod mobius;
mod test_function;

pub use drift::{AffineDrift, DriftField};
pub use manifold::{BoundaryData, Christoffel, ManifoldKind, ManifoldModel};
pub(crate) use manifold::{sphere_exp, sphere_transport};
pub use test_function::{
    boundary_test_function, cutoff, cutoff_deriv, pinned_test_function, TestFunction,
};

use nalgebra::DMatrix;

use crate::error::Result;
use crate::linalg::{block, eye, Mat, Vector};

/// Matrix of `Ric^Z` in an orthonormal frame `u` at `x`:
/// `R_ij = Ric(u_i, u_j) − ⟨∇_{u_i} Z, u_j⟩`.
///
/// With `∇Z = A` in chart coordinates and `G = μ I`, the frame matrix of the
/// endomorphism `A` is `B = μ uᵀ A u`, and `R = (d−1)κ I − Bᵀ`.
pub fn ricci_z_frame(model: &ManifoldModel, drift: &AffineDrift, x: &Vector, u: &Mat) -> Mat {
    let d = model.dim();
    let ric = (d as f64 - 1.0) * model.sectional_curvature();
    let mut r = eye(d) * ric;
    if !drift.zero {
        let mu = model.conformal_factor(x);
        let b = u.transpose() * drift.a * u * mu;
        for i in 0..d {
            for j in 0..d {
                r[(i, j)] -= b[(j, i)];
            }
        }
    }
    r
}

/// `Ric^Z` at `x` as a d×d matrix in the canonical frame of `T_xM`.
pub fn ricci_z_endo(model: &ManifoldModel, z: &DriftField, x: &Vector) -> Result<DMatrix<f64>> {
    model.check_point(x)?;
    let drift = z.affine(model)?;
    let u = model.canonical_frame(x);
    let d = model.dim();
    Ok(block(&ricci_z_frame(model, &drift, x, &u), d, d))
}
