use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ManifoldModel;

/// Scalar factor `c(t)` with `g_t = c(t) g_base`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleFamily {
    /// `c ≡ 1`: a static metric.
    Constant,
    /// `c(t) = c0 + rate·t`.
    Linear { c0: f64, rate: f64 },
}

impl ScaleFamily {
    #[inline]
    pub fn c(&self, t: f64) -> f64 {
        match self {
            ScaleFamily::Constant => 1.0,
            ScaleFamily::Linear { c0, rate } => c0 + rate * t,
        }
    }

    #[inline]
    pub fn dc(&self, _t: f64) -> f64 {
        match self {
            ScaleFamily::Constant => 0.0,
            ScaleFamily::Linear { rate, .. } => *rate,
        }
    }

    /// First time `c` reaches zero (infinite if never).
    pub fn horizon(&self) -> f64 {
        match self {
            ScaleFamily::Linear { c0, rate } if *rate < 0.0 => -c0 / rate,
            _ => f64::INFINITY,
        }
    }

    pub fn is_static(&self) -> bool {
        match self {
            ScaleFamily::Constant => true,
            ScaleFamily::Linear { c0, rate } => *c0 == 1.0 && *rate == 0.0,
        }
    }
}

/// A family `g_t = c(t)·g_base` on `[0, T_c)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolvingMetric {
    pub base: ManifoldModel,
    pub scale: ScaleFamily,
}

impl EvolvingMetric {
    pub fn new(base: ManifoldModel, scale: ScaleFamily) -> Result<Self> {
        if let ScaleFamily::Linear { c0, rate } = scale {
            if !(c0 > 0.0 && c0.is_finite() && rate.is_finite()) {
                return Err(Error::InvalidArgument("scale family needs c(0) > 0".into()));
            }
        }
        Ok(Self { base, scale })
    }

    pub fn fixed(base: ManifoldModel) -> Self {
        Self { base, scale: ScaleFamily::Constant }
    }

    /// The flow `½∂_t g = Ric` started from the round `S^d(1)`:
    /// `c(t) = 1 + 2(d−1)t`.
    pub fn expanding_sphere(d: usize) -> Result<Self> {
        Self::sphere_with_rate(d, 2.0 * (d as f64 - 1.0))
    }

    /// `c(t) = 1 + rate·t` on the unit sphere.
    pub fn sphere_with_rate(d: usize, rate: f64) -> Result<Self> {
        Self::new(ManifoldModel::sphere(d, 1.0)?, ScaleFamily::Linear { c0: 1.0, rate })
    }

    pub fn horizon(&self) -> f64 {
        self.scale.horizon()
    }

    /// `∂_t g_t = c'(t) g_base`, as a multiple of `g_base`.
    pub fn dt_metric_factor(&self, t: f64) -> f64 {
        self.scale.dc(t)
    }

    /// `𝓡ᵗᶻ` in a `g_t`-orthonormal frame when `Z = 0`: the isotropic value
    /// `((d−1)κ − ½c'(t)) / c(t)`.
    pub fn evolving_curvature(&self, t: f64) -> f64 {
        let d = self.base.dim() as f64;
        ((d - 1.0) * self.base.sectional_curvature() - 0.5 * self.scale.dc(t)) / self.scale.c(t)
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t < self.horizon()) {
            return Err(Error::InvalidArgument(format!("time {t} outside [0, {})", self.horizon())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expanding_sphere_solves_the_flow() {
        for d in 2..=3 {
            let m = EvolvingMetric::expanding_sphere(d).unwrap();
            for t in [0.0, 0.1, 0.7] {
                assert!(m.evolving_curvature(t).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn wrong_rate_sphere_has_negative_curvature() {
        let m = EvolvingMetric::sphere_with_rate(2, 4.0).unwrap();
        assert!((m.evolving_curvature(0.0) + 1.0).abs() < 1e-15);
        assert!((m.evolving_curvature(0.5) + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn shrinking_family_has_finite_horizon() {
        let s = ScaleFamily::Linear { c0: 1.0, rate: -2.0 };
        assert_eq!(s.horizon(), 0.5);
        assert!(EvolvingMetric::new(ManifoldModel::euclidean(1).unwrap(), s)
            .unwrap()
            .check_time(0.5)
            .is_err());
    }
}
