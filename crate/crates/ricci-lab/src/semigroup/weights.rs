use std::fmt;
use std::sync::Arc;

use crate::frame_sde::StepRecord;
use crate::linalg::Vector;

/// A scalar function of `(t, x)`: a curvature bound `K(t, x)` or a boundary
/// bound `σ(x)`.
#[derive(Clone)]
pub enum ScalarField {
    Constant(f64),
    Function(Arc<dyn Fn(f64, &Vector) -> f64 + Send + Sync>),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant(c) => write!(f, "Constant({c})"),
            ScalarField::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl ScalarField {
    #[inline]
    pub fn at(&self, t: f64, x: &Vector) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Function(f) => f(t, x),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            ScalarField::Constant(c) => Some(*c),
            ScalarField::Function(_) => None,
        }
    }
}

impl From<f64> for ScalarField {
    fn from(c: f64) -> Self {
        ScalarField::Constant(c)
    }
}

/// Additive path functional `𝒦 = ∫ K(r, X_r) dr + ∫ σ(X_r) dl_r`.
#[derive(Clone, Debug)]
pub struct Functional {
    pub k: ScalarField,
    pub sigma: Option<ScalarField>,
}

impl Functional {
    pub fn constant(k: f64) -> Self {
        Self { k: ScalarField::Constant(k), sigma: None }
    }

    pub fn with_boundary(k: impl Into<ScalarField>, sigma: impl Into<ScalarField>) -> Self {
        Self { k: k.into(), sigma: Some(sigma.into()) }
    }

    /// Contribution of one step: trapezoid in `K`, plus `σ` at the reflected
    /// point times the local-time increment.
    #[inline]
    pub fn increment(&self, rec: &StepRecord) -> f64 {
        let mut v = match &self.k {
            ScalarField::Constant(c) => c * rec.h,
            ScalarField::Function(f) => 0.5 * rec.h * (f(rec.t0, &rec.x0) + f(rec.t0 + rec.h, &rec.x1)),
        };
        if let (Some(s), true) = (&self.sigma, rec.dl > 0.0) {
            v += s.at(rec.t0 + rec.h, &rec.x1) * rec.dl;
        }
        v
    }

    /// Whether `𝒦[r, t]` is the deterministic `k·(t − r)`.
    pub fn is_deterministic(&self) -> bool {
        self.k.constant().is_some() && self.sigma.as_ref().map_or(true, |s| s.constant() == Some(0.0))
    }
}

/// Weight `w` multiplying the pairing of a weighted-pairing estimate.
#[derive(Clone, Debug)]
pub enum WeightSpec {
    One,
    /// `e^{−k(t−r)}`.
    Constant(f64),
    /// `e^{−𝒦[r,t]}`.
    Damping(Functional),
    /// `e^{½(𝒦₂ − 𝒦₁)[r,t]}`.
    HalfDifference(Functional, Functional),
}

/// Running value of a [`WeightSpec`] along a path segment.
#[derive(Clone, Debug)]
pub struct WeightAccumulator<'a> {
    spec: &'a WeightSpec,
    a: f64,
    b: f64,
    elapsed: f64,
}

impl<'a> WeightAccumulator<'a> {
    pub fn new(spec: &'a WeightSpec) -> Self {
        Self { spec, a: 0.0, b: 0.0, elapsed: 0.0 }
    }

    #[inline]
    pub fn push(&mut self, rec: &StepRecord) {
        self.elapsed += rec.h;
        match self.spec {
            WeightSpec::Damping(k) => self.a += k.increment(rec),
            WeightSpec::HalfDifference(k1, k2) => {
                self.a += k1.increment(rec);
                self.b += k2.increment(rec);
            }
            _ => {}
        }
    }

    pub fn value(&self) -> f64 {
        match self.spec {
            WeightSpec::One => 1.0,
            WeightSpec::Constant(k) => (-k * self.elapsed).exp(),
            WeightSpec::Damping(_) => (-self.a).exp(),
            WeightSpec::HalfDifference(..) => (0.5 * (self.b - self.a)).exp(),
        }
    }
}

/// `φ(k, τ) = (1 − e^{−2kτ}) / (2k)`, continuous through `k = 0`.
pub fn phi(k: f64, tau: f64) -> f64 {
    let x = 2.0 * k * tau;
    if x.abs() < 1e-8 {
        // (1 − e^{−x})/x = 1 − x/2 + x²/6
        tau * (1.0 - 0.5 * x + x * x / 6.0)
    } else {
        -(-x).exp_m1() / (2.0 * k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(h: f64, dl: f64) -> StepRecord {
        StepRecord { t0: 0.0, h, x0: Vector::zeros(), x1: Vector::zeros(), dl, normal: None }
    }

    #[test]
    fn phi_is_continuous_at_zero() {
        assert!((phi(0.0, 0.7) - 0.7).abs() < 1e-15);
        assert!((phi(1e-9, 0.7) - 0.7).abs() < 1e-9);
        assert!((phi(1e-7, 0.7) - phi(1e-9, 0.7)).abs() < 1e-7);
        assert!((phi(1.0, 0.5) - (1.0 - (-1.0f64).exp()) / 2.0).abs() < 1e-15);
        assert!((phi(-1.0, 0.5) - ((1.0f64).exp() - 1.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_functional_collapses() {
        let spec = WeightSpec::Damping(Functional::constant(0.8));
        let flat = WeightSpec::Constant(0.8);
        let (mut a, mut b) = (WeightAccumulator::new(&spec), WeightAccumulator::new(&flat));
        for _ in 0..100 {
            a.push(&rec(0.01, 0.0));
            b.push(&rec(0.01, 0.0));
        }
        assert!((a.value() - b.value()).abs() < 1e-12);
    }

    #[test]
    fn boundary_term_uses_local_time() {
        let k = Functional::with_boundary(0.0, 1.0);
        assert_eq!(k.increment(&rec(0.1, 0.25)), 0.25);
        assert!(!k.is_deterministic());
        assert!(Functional::with_boundary(2.0, 0.0).is_deterministic());
    }
}
