//! Streaming moments, delta-method errors and small least-squares fits.

use nalgebra::{DMatrix, DVector};

/// Running mean and covariance of a fixed-length observable vector
/// (Welford, with Chan's pairwise merge).
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    n: u64,
    mean: Vec<f64>,
    /// Upper-triangular co-moment sums, row major.
    m2: Vec<f64>,
}

impl Moments {
    pub fn new(k: usize) -> Self {
        Self { n: 0, mean: vec![0.0; k], m2: vec![0.0; k * k] }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn push(&mut self, x: &[f64]) {
        let k = self.len();
        debug_assert_eq!(x.len(), k);
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        let mut delta = [0.0f64; 64];
        let delta: &mut [f64] = if k <= 64 { &mut delta[..k] } else { &mut vec![0.0; k][..] };
        for i in 0..k {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] * inv;
        }
        for i in 0..k {
            let di = x[i] - self.mean[i];
            for j in i..k {
                self.m2[i * k + j] += delta[j] * di;
            }
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let k = self.len();
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta: Vec<f64> = (0..k).map(|i| other.mean[i] - self.mean[i]).collect();
        for i in 0..k {
            for j in i..k {
                self.m2[i * k + j] += other.m2[i * k + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for i in 0..k {
            self.mean[i] += delta[i] * nb / n;
        }
        self.n += other.n;
    }

    /// Sample covariance (unbiased).
    pub fn cov(&self) -> DMatrix<f64> {
        let k = self.len();
        let den = (self.n.max(2) - 1) as f64;
        DMatrix::from_fn(k, k, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            self.m2[a * k + b] / den
        })
    }

    pub fn var(&self, i: usize) -> f64 {
        let den = (self.n.max(2) - 1) as f64;
        (self.m2[i * self.len() + i] / den).max(0.0)
    }

    /// Standard error of the mean of component `i`.
    pub fn se(&self, i: usize) -> f64 {
        (self.var(i) / self.n.max(1) as f64).sqrt()
    }
}

/// Value and delta-method standard error of a smooth statistic of the means.
///
/// The gradient is taken by central differences with steps scaled to the
/// sampling noise of each mean.
pub fn delta_method(m: &Moments, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let mean = m.mean().to_vec();
    let value = f(&mean);
    let k = m.len();
    let n = m.count().max(1) as f64;
    let cov = m.cov();
    let mut grad = DVector::zeros(k);
    let mut x = mean.clone();
    for i in 0..k {
        let sd = (m.var(i) / n).sqrt();
        if sd == 0.0 {
            continue;
        }
        let eps = 1e-4 * sd + 1e-9 * mean[i].abs();
        x[i] = mean[i] + eps;
        let up = f(&x);
        x[i] = mean[i] - eps;
        let dn = f(&x);
        x[i] = mean[i];
        grad[i] = (up - dn) / (2.0 * eps);
    }
    let var = (grad.transpose() * cov * &grad)[(0, 0)] / n;
    (value, var.max(0.0).sqrt())
}

/// Ordinary least-squares line `y = a + b x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Root mean square of the residuals.
    pub residual: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    LineFit { intercept, slope, residual: (ss / n).sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn line_fit_recovers_exact_line() {
        let f = fit_line(&[0.02, 0.04, 0.08], &[1.1, 1.2, 1.4]);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.slope - 5.0).abs() < 1e-10);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn delta_method_of_mean_is_standard_error() {
        let mut m = Moments::new(2);
        for i in 0..1000 {
            let x = (i as f64 * 0.37).sin();
            m.push(&[x, 2.0 * x]);
        }
        let (v, se) = delta_method(&m, |p| p[0]);
        assert_eq!(v, m.mean()[0]);
        assert!((se - m.se(0)).abs() < 1e-8 * m.se(0));
        // f = p1 - 2 p0 is identically zero on the sample
        let (_, se0) = delta_method(&m, |p| p[1] - 2.0 * p[0]);
        assert!(se0 < 1e-9);
    }

    proptest! {
        #[test]
        fn merge_matches_sequential(xs in prop::collection::vec((-10.0f64..10.0, -5.0f64..5.0), 2..60), cut in 0usize..60) {
            let cut = cut.min(xs.len());
            let mut all = Moments::new(2);
            let mut a = Moments::new(2);
            let mut b = Moments::new(2);
            for (i, (x, y)) in xs.iter().enumerate() {
                all.push(&[*x, *y]);
                if i < cut { a.push(&[*x, *y]) } else { b.push(&[*x, *y]) }
            }
            a.merge(&b);
            prop_assert_eq!(a.count(), all.count());
            for i in 0..2 {
                prop_assert!((a.mean()[i] - all.mean()[i]).abs() < 1e-10);
            }
            let (ca, cb) = (a.cov(), all.cov());
            prop_assert!((ca - cb).abs().max() < 1e-8);
        }
    }
}
