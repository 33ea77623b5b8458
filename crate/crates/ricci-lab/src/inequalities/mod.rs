//! Monte Carlo checks of the gradient, Poincaré and log-Sobolev type
//! inequalities equivalent to two-sided curvature bounds, and of the sharp
//! optimized bound.

mod assemble;
mod bounds;
mod report;

pub(crate) use report::nullable;

pub use assemble::{build, IneqEnsemble, Layout, Problem, SEGMENTS};
pub use bounds::{accumulate_weight, CurvatureBounds};
pub use report::{
    fmt_f64, read_reports, verdict, write_reports, Diagnostics, Family, InequalityReport, Theorem, Verdict,
    CSV_HEADER, Z,
};

use crate::error::{Error, Result};
use crate::frame_sde::{Diffusion, EvolvingMetric};
use crate::geometry::{DriftField, TestFunction};
use crate::linalg::Vector;
use crate::semigroup::{McConfig, ScalarField};
use crate::stats::delta_method;

/// Smallest admissible `(e − 1)|B − A|²` in the sharp bound.
pub const SHARP_DENOMINATOR_MIN: f64 = 1e-12;

/// Unprimed or primed variant of a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Plain,
    Prime,
}

struct Means<'a> {
    l: &'a Layout,
    m: &'a [f64],
}

impl Means<'_> {
    fn vec(&self, at: usize) -> Vector {
        let mut v = Vector::zeros();
        for a in 0..self.l.d {
            v[a] = self.m[at + a];
        }
        v
    }

    fn get(&self, at: usize) -> f64 {
        self.m[at]
    }
}

fn lhs_value(fam: Family, mm: &Means) -> f64 {
    let l = mm.l;
    match fam {
        Family::GradEstimate | Family::Grad | Family::GradPrime | Family::Sharp => {
            mm.vec(l.w0).norm_squared() - mm.get(l.lhs_w)
        }
        Family::Poincare(p) | Family::PoincarePrime(p) => {
            let fp = mm.get(l.fp_index(p).expect("exponent in layout"));
            p * (mm.get(l.f2) - fp.powf(p)) / (4.0 * (p - 1.0)) - mm.get(l.lhs_int)
        }
        Family::LogSob | Family::LogSobPrime => {
            let f2 = mm.get(l.f2);
            0.25 * (mm.get(l.ent) - f2 * f2.ln()) - mm.get(l.lhs_int)
        }
    }
}

/// Unclipped sharp bound `4[e|B|² − ⟨B,C⟩] − ⟨B−A,(2e−1)B−C⟩²/((e−1)|B−A|²)`.
fn sharp_raw(a: &Vector, b: &Vector, c: &Vector, e: f64) -> std::result::Result<f64, f64> {
    let diff = b - a;
    let den = (e - 1.0) * diff.norm_squared();
    if !(den >= SHARP_DENOMINATOR_MIN) {
        return Err(den);
    }
    let num = diff.dot(&(b * (2.0 * e - 1.0) - c));
    Ok(4.0 * (e * b.norm_squared() - b.dot(c)) - num * num / den)
}

fn rhs_value(fam: Family, mm: &Means) -> f64 {
    let l = mm.l;
    let (a, b, c, e) = (mm.vec(l.g0), mm.vec(l.w0), mm.vec(l.c), mm.get(l.w2h));
    let raw = match fam {
        Family::GradEstimate => 0.0,
        Family::Grad => 4.0 * ((e - 1.0) * a.norm_squared() + a.dot(&b) - a.dot(&c)),
        Family::GradPrime => 4.0 * (e * b.norm_squared() - b.dot(&c)),
        Family::Poincare(_) | Family::LogSob => 4.0 * mm.get(l.rhs3),
        Family::PoincarePrime(_) | Family::LogSobPrime => 4.0 * mm.get(l.rhs3p),
        // Near-degenerate perturbations of the means fall back to NaN and are
        // caught by the finiteness check on the standard error.
        Family::Sharp => sharp_raw(&a, &b, &c, e).unwrap_or(f64::NAN),
    };
    raw.min(0.0)
}

/// Report for one family from a shared ensemble.
pub fn report(ie: &IneqEnsemble, family: Family, mc: &McConfig) -> Result<InequalityReport> {
    let l = &ie.layout;
    if family.needs_branches() && !ie.branches {
        return Err(Error::InvalidArgument(format!("ensemble was built without branches for {family}")));
    }
    if let Some(p) = family.exponent() {
        if l.fp_index(p).is_none() {
            return Err(Error::InvalidArgument(format!("ensemble lacks exponent {p}")));
        }
    }
    let m = &ie.ens.moments;
    let mut note = String::new();
    let mut flagged = ie.flagged;
    if family == Family::Sharp {
        let mm = Means { l, m: m.mean() };
        if let Err(den) = sharp_raw(&mm.vec(l.g0), &mm.vec(l.w0), &mm.vec(l.c), mm.get(l.w2h)) {
            flagged = true;
            note = Error::DegenerateOptimizer(den).to_string();
        }
    }
    let (lhs, se_lhs) = delta_method(m, |v| lhs_value(family, &Means { l, m: v }));
    let (rhs, se_rhs) = delta_method(m, |v| rhs_value(family, &Means { l, m: v }));
    let (margin, se_margin) = delta_method(m, |v| {
        let mm = Means { l, m: v };
        rhs_value(family, &mm) - lhs_value(family, &mm)
    });
    let v = verdict(lhs, rhs, margin, se_margin, mc.z, flagged);
    Ok(InequalityReport {
        id: format!("{}/{}/t={}", ie.theorem, family, ie.t),
        family,
        theorem: ie.theorem,
        lhs,
        rhs,
        se_lhs,
        se_rhs,
        margin,
        se_margin,
        verdict: v,
        n_paths: ie.ens.n_paths,
        seed: mc.seed,
        config_hash: String::new(),
        diagnostics: Diagnostics {
            exclusion_fraction: ie.ens.exclusion_fraction(),
            moment: m.mean()[l.moment],
            checksum_lhs: ie.ens.checksum,
            checksum_rhs: ie.ens.checksum,
            note,
            t: ie.t,
        },
    })
}

/// Every family in `families` from one ensemble.
pub fn eval_families(p: &Problem, families: &[Family], mc: &McConfig) -> Result<Vec<InequalityReport>> {
    let ie = build(p, families, mc)?;
    families.iter().map(|f| report(&ie, *f, mc)).collect()
}

fn single(p: &Problem, family: Family, mc: &McConfig) -> Result<InequalityReport> {
    let ie = build(p, &[family], mc)?;
    report(&ie, family, mc)
}

/// `|∇P f|² − e^{−2k₁t}P|∇f|² ≤ RHS ∧ 0`, unprimed or primed right-hand side.
pub fn eval_gradient_ineq(variant: Variant, p: &Problem, mc: &McConfig) -> Result<InequalityReport> {
    single(p, if variant == Variant::Plain { Family::Grad } else { Family::GradPrime }, mc)
}

/// The gradient estimate `|∇P f|² ≤ e^{−2k₁t}P|∇f|²` on its own.
pub fn eval_gradient_estimate(p: &Problem, mc: &McConfig) -> Result<InequalityReport> {
    single(p, Family::GradEstimate, mc)
}

/// Poincaré-type inequality with exponent `exponent ∈ (1, 2]`.
pub fn eval_poincare_ineq(variant: Variant, p: &Problem, exponent: f64, mc: &McConfig) -> Result<InequalityReport> {
    let fam = match variant {
        Variant::Plain => Family::Poincare(exponent),
        Variant::Prime => Family::PoincarePrime(exponent),
    };
    single(p, fam, mc)
}

pub fn eval_logsobolev_ineq(variant: Variant, p: &Problem, mc: &McConfig) -> Result<InequalityReport> {
    single(p, if variant == Variant::Plain { Family::LogSob } else { Family::LogSobPrime }, mc)
}

/// The optimized bound. Needs strictly ordered constant curvature bounds.
pub fn eval_sharp_bound(p: &Problem, mc: &McConfig) -> Result<InequalityReport> {
    sharp_precondition(p)?;
    single(p, Family::Sharp, mc)
}

fn sharp_precondition(p: &Problem) -> Result<()> {
    match (p.bounds.k1.constant(), p.bounds.k2.constant()) {
        (Some(a), Some(b)) if a < b => Ok(()),
        _ => Err(Error::InvalidArgument("sharp bound needs constant k1 < k2".into())),
    }
}

/// Sharp, unprimed and primed right-hand sides from one ensemble, for the
/// dominance check `sharp ≤ min(unprimed, primed)`.
#[derive(Clone, Debug)]
pub struct SharpComparison {
    pub sharp: InequalityReport,
    pub grad: InequalityReport,
    pub grad_prime: InequalityReport,
}

impl SharpComparison {
    /// `sharp ≤ min + z·SE`, with the standard error of the minimizing side.
    pub fn dominated(&self, z: f64) -> bool {
        let other = if self.grad.rhs <= self.grad_prime.rhs { &self.grad } else { &self.grad_prime };
        self.sharp.rhs <= other.rhs + z * self.sharp.se_rhs.hypot(other.se_rhs) + 1e-12
    }
}

pub fn compare_sharp(p: &Problem, mc: &McConfig) -> Result<SharpComparison> {
    sharp_precondition(p)?;
    let ie = build(p, &[Family::Sharp, Family::Grad, Family::GradPrime], mc)?;
    Ok(SharpComparison {
        sharp: report(&ie, Family::Sharp, mc)?,
        grad: report(&ie, Family::Grad, mc)?,
        grad_prime: report(&ie, Family::GradPrime, mc)?,
    })
}

/// Checks the evolving-metric families on `[s, t]` for the asserted bounds
/// `K ≤ 𝓡ᵗᶻ ≤ K₂`; `k2 = None` asserts the upper bound `K` as well.
#[allow(clippy::too_many_arguments)]
pub fn eval_flow_certificate(
    metric: EvolvingMetric,
    z: DriftField,
    k: ScalarField,
    k2: Option<ScalarField>,
    f: &TestFunction,
    x: &Vector,
    (s, t): (f64, f64),
    families: &[Family],
    mc: &McConfig,
) -> Result<Vec<InequalityReport>> {
    let diff = Diffusion::evolving(metric, z)?;
    let bounds = CurvatureBounds { k2: k2.unwrap_or_else(|| k.clone()), k1: k, sigma1: None, sigma2: None };
    let p = Problem { diff: &diff, f, x: *x, s, t, bounds: &bounds };
    eval_families(&p, families, mc)
}

#[cfg(test)]
mod tests;
