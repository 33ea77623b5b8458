use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::splitmix64;
use crate::stats::Moments;

/// Paths per reduction block. Blocks are reduced in index order, so results
/// do not depend on the worker count.
pub const BLOCK: usize = 256;
pub const MIN_PATHS: usize = 100;

/// Monte Carlo controls shared by every estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    /// Target step size; estimators round to a whole number of steps.
    pub h: f64,
    pub seed: u64,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Largest acceptable fraction of guard-excluded paths.
    #[serde(default = "default_tol")]
    pub exclusion_tol: f64,
    /// Verdict threshold in standard errors.
    #[serde(default = "default_z")]
    pub z: f64,
}

fn default_jobs() -> usize {
    1
}

fn default_tol() -> f64 {
    1e-3
}

fn default_z() -> f64 {
    3.0
}

impl McConfig {
    pub fn new(n_paths: usize, h: f64, seed: u64) -> Self {
        Self { n_paths, h, seed, jobs: 1, exclusion_tol: default_tol(), z: default_z() }
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    /// Whole number of steps covering `len` at roughly `h`, and the exact step.
    pub fn steps_for(&self, len: f64) -> (usize, f64) {
        let n = ((len / self.h) - 1e-9).ceil().max(1.0) as usize;
        (n, len / n as f64)
    }

    /// As [`McConfig::steps_for`], rounded up to a multiple of `m`.
    pub fn steps_multiple(&self, len: f64, m: usize) -> (usize, f64) {
        let (n, _) = self.steps_for(len);
        let n = n.div_ceil(m) * m;
        (n, len / n as f64)
    }
}

/// Reduced observables of one ensemble.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub moments: Moments,
    pub n_paths: usize,
    pub n_excluded: usize,
    /// Hash of the increments consumed by every retained path.
    pub checksum: u64,
}

impl Ensemble {
    pub fn exclusion_fraction(&self) -> f64 {
        self.n_excluded as f64 / self.n_paths.max(1) as f64
    }

    pub fn all_finite(&self) -> bool {
        self.moments.mean().iter().all(|v| v.is_finite())
    }
}

struct Block {
    moments: Moments,
    excluded: usize,
    checksum: u64,
}

/// Runs `per_path` for every path index and reduces its observable vector
/// (length `k`). Paths failing with `DivergedPath` are excluded and counted;
/// any other error aborts.
pub fn run_ensemble<F>(mc: &McConfig, k: usize, per_path: F) -> Result<Ensemble>
where
    F: Fn(u64) -> Result<(Vec<f64>, u64)> + Sync,
{
    if mc.n_paths < MIN_PATHS {
        return Err(Error::TooFewPaths { got: mc.n_paths, min: MIN_PATHS });
    }
    let n = mc.n_paths;
    let blocks = n.div_ceil(BLOCK);
    let run_block = |b: usize| -> Result<Block> {
        let mut m = Moments::new(k);
        let mut excluded = 0;
        let mut checksum = 0u64;
        for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
            match per_path(i as u64) {
                Ok((obs, c)) => {
                    m.push(&obs);
                    checksum = checksum.wrapping_add(splitmix64(c ^ i as u64));
                }
                Err(Error::DivergedPath { .. }) => excluded += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(Block { moments: m, excluded, checksum })
    };
    let results: Vec<Result<Block>> = if mc.jobs <= 1 {
        (0..blocks).map(run_block).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(mc.jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| (0..blocks).into_par_iter().map(run_block).collect())
    };
    let mut out = Ensemble { moments: Moments::new(k), n_paths: n, n_excluded: 0, checksum: 0 };
    for r in results {
        let b = r?;
        out.moments.merge(&b.moments);
        out.n_excluded += b.excluded;
        out.checksum = out.checksum.wrapping_add(b.checksum);
    }
    if out.moments.count() < 2 {
        return Err(Error::TooFewPaths { got: out.moments.count() as usize, min: MIN_PATHS });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn result_independent_of_jobs() {
        let mc = McConfig::new(3000, 0.1, 1);
        let f = |i: u64| {
            let x = (splitmix64(i) >> 11) as f64 / (1u64 << 53) as f64;
            if i % 997 == 5 {
                return Err(Error::DivergedPath { path_index: i, t: 0.0 });
            }
            Ok((vec![x, x * x], i))
        };
        let a = run_ensemble(&mc, 2, f).unwrap();
        let b = run_ensemble(&mc.with_jobs(4), 2, f).unwrap();
        assert_eq!(a.moments, b.moments);
        assert_eq!(a.checksum, b.checksum);
        assert_eq!(a.n_excluded, 4);
    }

    #[test]
    fn too_few_paths() {
        let mc = McConfig::new(50, 0.1, 1);
        let r = run_ensemble(&mc, 1, |_| Ok((vec![0.0], 0)));
        assert!(matches!(r, Err(Error::TooFewPaths { got: 50, min: 100 })));
    }

    #[test]
    fn step_rounding() {
        let mc = McConfig::new(100, 0.003, 0);
        let (n, h) = mc.steps_multiple(0.5, 15);
        assert_eq!(n % 15, 0);
        assert!(h <= 0.003 && (n as f64 * h - 0.5).abs() < 1e-12);
        assert_eq!(McConfig::new(100, 0.1, 0).steps_for(1.0).0, 10);
    }
}
