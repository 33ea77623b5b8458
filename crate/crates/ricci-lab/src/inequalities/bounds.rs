use crate::error::{Error, Result};
use crate::frame_sde::{PathSample, StepRecord};
use crate::semigroup::{Functional, ScalarField};

/// Asserted curvature bounds `K₁ ≤ Ric^Z ≤ K₂` (or `𝓡ᵗᶻ`), with boundary
/// bounds `σ₁ ≤ II ≤ σ₂` when the model has a boundary.
#[derive(Clone, Debug)]
pub struct CurvatureBounds {
    pub k1: ScalarField,
    pub k2: ScalarField,
    pub sigma1: Option<ScalarField>,
    pub sigma2: Option<ScalarField>,
}

impl CurvatureBounds {
    pub fn constant(k1: f64, k2: f64) -> Result<Self> {
        let b = Self { k1: k1.into(), k2: k2.into(), sigma1: None, sigma2: None };
        b.validate()?;
        Ok(b)
    }

    pub fn with_boundary(k1: f64, k2: f64, sigma1: f64, sigma2: f64) -> Result<Self> {
        let b = Self {
            k1: k1.into(),
            k2: k2.into(),
            sigma1: Some(sigma1.into()),
            sigma2: Some(sigma2.into()),
        };
        b.validate()?;
        Ok(b)
    }

    /// Constant parts must be ordered; function-valued bounds are checked
    /// wherever paths evaluate them.
    pub fn validate(&self) -> Result<()> {
        if let (Some(a), Some(b)) = (self.k1.constant(), self.k2.constant()) {
            if !(a <= b) {
                return Err(Error::InvalidArgument(format!("k1 = {a} exceeds k2 = {b}")));
            }
        }
        if self.sigma1.is_some() != self.sigma2.is_some() {
            return Err(Error::InvalidArgument("give both boundary bounds or neither".into()));
        }
        if let (Some(a), Some(b)) = (
            self.sigma1.as_ref().and_then(|s| s.constant()),
            self.sigma2.as_ref().and_then(|s| s.constant()),
        ) {
            if !(a <= b) {
                return Err(Error::InvalidArgument(format!("sigma1 = {a} exceeds sigma2 = {b}")));
            }
        }
        Ok(())
    }

    /// `𝒦₁ = ∫K₁ dr + ∫σ₁ dl`.
    pub fn lower(&self) -> Functional {
        Functional { k: self.k1.clone(), sigma: self.sigma1.clone() }
    }

    /// `𝒦₂ = ∫K₂ dr + ∫σ₂ dl`.
    pub fn upper(&self) -> Functional {
        Functional { k: self.k2.clone(), sigma: self.sigma2.clone() }
    }

    /// Whether `𝒦₂ − 𝒦₁` is deterministic on every path.
    pub fn half_difference_is_deterministic(&self) -> bool {
        let k = matches!((self.k1.constant(), self.k2.constant()), (Some(_), Some(_)));
        let s = match (&self.sigma1, &self.sigma2) {
            (None, None) => true,
            (Some(a), Some(b)) => matches!((a.constant(), b.constant()), (Some(x), Some(y)) if x == y),
            _ => false,
        };
        k && s
    }
}

/// Step records of a stored path, in order.
pub(crate) fn records(path: &PathSample) -> impl Iterator<Item = StepRecord> + '_ {
    (0..path.steps()).map(move |k| StepRecord {
        t0: path.time(k),
        h: path.h,
        x0: path.positions[k],
        x1: path.positions[k + 1],
        dl: path.local_time[k],
        normal: path.normals[k],
    })
}

/// `∫_s^t K(r, X_r) dr + ∫_s^t σ(X_r) dl_r` along a stored path: trapezoid
/// in `K` over the nodes plus `Σ σ·Δl`.
pub fn accumulate_weight(
    path: &PathSample,
    k: &ScalarField,
    sigma: Option<&ScalarField>,
    s: f64,
    t: f64,
) -> Result<f64> {
    let (a, b) = match (path.node(s), path.node(t)) {
        (Ok(a), Ok(b)) if a <= b => (a, b),
        _ => return Err(Error::IntervalOutsideGrid { s, t }),
    };
    let f = Functional { k: k.clone(), sigma: sigma.cloned() };
    Ok(records(path).skip(a).take(b - a).map(|r| f.increment(&r)).sum())
}
