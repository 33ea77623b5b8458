use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_sde::{Diffusion, EvolvingMetric, ScaleFamily};
use crate::geometry::{boundary_test_function, pinned_test_function, DriftField, ManifoldModel, TestFunction};
use crate::inequalities::{CurvatureBounds, Family};
use crate::linalg::{vector_from, Vector, CAP};
use crate::recovery::{BoundaryMethod, RicciMethod, SampleSpec};
use crate::semigroup::{McConfig, MIN_PATHS};

/// Model space of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldSpec {
    Euclidean { dim: usize },
    FlatTorus { periods: Vec<f64> },
    Sphere { dim: usize, radius: f64 },
    Hyperbolic { dim: usize, #[serde(default = "one")] scale: f64 },
    Ball { dim: usize, radius: f64 },
    HalfSpace { dim: usize },
}

fn one() -> f64 {
    1.0
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<ManifoldModel> {
        match self {
            ManifoldSpec::Euclidean { dim } => ManifoldModel::euclidean(*dim),
            ManifoldSpec::FlatTorus { periods } => ManifoldModel::flat_torus(periods),
            ManifoldSpec::Sphere { dim, radius } => ManifoldModel::sphere(*dim, *radius),
            ManifoldSpec::Hyperbolic { dim, scale } => ManifoldModel::hyperbolic(*dim, *scale),
            ManifoldSpec::Ball { dim, radius } => ManifoldModel::ball(*dim, *radius),
            ManifoldSpec::HalfSpace { dim } => ManifoldModel::half_space(*dim),
        }
    }
}

/// Constant asserted bounds; boundary bounds come in pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub k1: f64,
    pub k2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
}

impl BoundsSpec {
    pub fn build(&self) -> Result<CurvatureBounds> {
        match (self.sigma1, self.sigma2) {
            (None, None) => CurvatureBounds::constant(self.k1, self.k2),
            (Some(a), Some(b)) => CurvatureBounds::with_boundary(self.k1, self.k2, a, b),
            _ => Err(Error::InvalidArgument("give both sigma1 and sigma2 or neither".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunctionKind {
    Pinned,
    BoundaryPinned,
    Linear,
    Sine,
    Constant,
}

/// Test function `f + offset`. Pinned kinds take `point` (defaulting to the
/// start point), `direction` and `cutoff`; `linear` takes `coefficients`,
/// `sine` takes `wave` and `phase`, `constant` takes `value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionSpec {
    pub kind: TestFunctionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wave: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default)]
    pub offset: f64,
}

fn need<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::ConfigInvalid(format!("test_function needs `{what}`")))
}

impl TestFunctionSpec {
    pub fn build(&self, model: &ManifoldModel, start: Option<&Vector>) -> Result<TestFunction> {
        let point = || -> Result<Vector> {
            match (&self.point, start) {
                (Some(p), _) => point_vector(model, p),
                (None, Some(x)) => Ok(*x),
                (None, None) => Err(Error::ConfigInvalid("test_function needs `point`".into())),
            }
        };
        let f = match self.kind {
            TestFunctionKind::Pinned => {
                let dir = padded(need(&self.direction, "direction")?)?;
                pinned_test_function(model, &point()?, &dir, *need(&self.cutoff, "cutoff")?)?
            }
            TestFunctionKind::BoundaryPinned => {
                let dir = padded(need(&self.direction, "direction")?)?;
                boundary_test_function(model, &point()?, &dir, *need(&self.cutoff, "cutoff")?)?
            }
            TestFunctionKind::Linear => TestFunction::linear(model, need(&self.coefficients, "coefficients")?)?,
            TestFunctionKind::Sine => {
                TestFunction::sine(model, need(&self.wave, "wave")?, self.phase.unwrap_or(0.0))?
            }
            TestFunctionKind::Constant => TestFunction::constant(model, *need(&self.value, "value")?),
        };
        Ok(f.with_offset(self.offset))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalitySpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub families: Vec<Family>,
    pub start: Vec<f64>,
    #[serde(default)]
    pub s: f64,
    pub times: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryKind {
    Ricci,
    Ii,
    Evolving,
    PinchScan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverySpec {
    pub kind: RecoveryKind,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(default)]
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<SampleSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub n_paths: usize,
    pub h: f64,
    pub seed: u64,
    #[serde(default = "three")]
    pub z: f64,
    #[serde(default = "tol")]
    pub exclusion_tol: f64,
}

fn three() -> f64 {
    3.0
}

fn tol() -> f64 {
    1e-3
}

impl McSpec {
    pub fn config(&self, jobs: usize) -> McConfig {
        McConfig { z: self.z, exclusion_tol: self.exclusion_tol, ..McConfig::new(self.n_paths, self.h, self.seed) }
            .with_jobs(jobs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

fn all_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv, Format::Svg]
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: None, formats: all_formats() }
    }
}

/// One experiment, read from TOML or JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub manifold: ManifoldSpec,
    #[serde(default)]
    pub drift: DriftField,
    /// Scale family `g_t = c(t) g` of an evolving metric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolving: Option<ScaleFamily>,
    #[serde(default)]
    pub bounds: BoundsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_function: Option<TestFunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequalities: Option<InequalitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery: Option<RecoverySpec>,
    pub mc: McSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn padded(v: &[f64]) -> Result<Vector> {
    if v.len() > CAP {
        return Err(Error::UnsupportedDimension(v.len()));
    }
    Ok(vector_from(v))
}

pub(crate) fn point_vector(model: &ManifoldModel, v: &[f64]) -> Result<Vector> {
    if v.len() != model.ambient_dim() {
        return Err(Error::ConfigInvalid(format!(
            "point must have {} coordinates, got {}",
            model.ambient_dim(),
            v.len()
        )));
    }
    let x = padded(v)?;
    model.check_point(&x)?;
    Ok(x)
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn invalid(e: impl std::fmt::Display) -> Error {
    Error::ConfigInvalid(e.to_string())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(invalid)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(invalid)
    }

    /// JSON when the first non-blank character is `{`, TOML otherwise.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json_str(text)
        } else {
            Self::from_toml_str(text)
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            Some("toml") => Self::from_toml_str(&text),
            _ => Self::parse(&text),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(invalid)
    }

    /// Compact JSON with keys sorted at every level.
    pub fn canonical_json(&self) -> String {
        // serde_json's map type is ordered by key.
        let value = serde_json::to_value(self).expect("config is serializable");
        serde_json::to_string(&value).expect("value is serializable")
    }

    pub fn hash(&self) -> u64 {
        fnv1a64(self.canonical_json().as_bytes())
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.hash())
    }

    pub fn model(&self) -> Result<ManifoldModel> {
        self.manifold.build()
    }

    pub fn diffusion(&self) -> Result<Diffusion> {
        let model = self.model()?;
        match self.evolving {
            None => Diffusion::new(model, self.drift.clone()),
            Some(scale) => Diffusion::evolving(EvolvingMetric::new(model, scale)?, self.drift.clone()),
        }
    }

    /// Families to check; the flow certificate defaults to the gradient pair.
    pub fn families(&self) -> Vec<Family> {
        match &self.inequalities {
            Some(i) if !i.families.is_empty() => i.families.clone(),
            _ if self.evolving.is_some() => vec![Family::Grad, Family::GradPrime],
            _ => Family::suite(1.5).to_vec(),
        }
    }

    /// Checks everything that can be checked without simulating; every
    /// failure is reported as `ConfigInvalid`.
    pub fn validate(&self) -> Result<()> {
        self.validate_inner().map_err(|e| match e {
            Error::ConfigInvalid(_) => e,
            other => Error::ConfigInvalid(other.to_string()),
        })
    }

    fn validate_inner(&self) -> Result<()> {
        let mc = &self.mc;
        if mc.n_paths < MIN_PATHS {
            return Err(Error::TooFewPaths { got: mc.n_paths, min: MIN_PATHS });
        }
        if !(mc.h > 0.0 && mc.h.is_finite()) || !(mc.z > 0.0) || !(0.0..=1.0).contains(&mc.exclusion_tol) {
            return Err(invalid("mc needs h > 0, z > 0 and exclusion_tol in [0, 1]"));
        }
        let bounds = self.bounds.build()?;
        bounds.validate()?;
        let diff = self.diffusion()?;
        let model = *diff.model();
        if self.bounds.sigma1.is_some() && !model.has_boundary() {
            return Err(invalid("boundary bounds given for a model without boundary"));
        }
        if let Some(ineq) = &self.inequalities {
            let x = point_vector(&model, &ineq.start)?;
            if ineq.times.is_empty() || ineq.times.iter().any(|t| !(*t > ineq.s)) {
                return Err(invalid("inequality times must be non-empty and exceed s"));
            }
            for t in &ineq.times {
                diff.metric().check_time(*t)?;
            }
            let tf = self.test_function.as_ref().ok_or_else(|| invalid("inequalities need a test_function"))?;
            tf.build(&model, Some(&x))?;
            for f in self.families() {
                if let Some(p) = f.exponent() {
                    if !(p > 1.0 && p <= 2.0) {
                        return Err(invalid(format!("Poincaré exponent {p} outside (1, 2]")));
                    }
                }
                if f == Family::Sharp && !(self.bounds.k1 < self.bounds.k2) {
                    return Err(invalid("sharp bound needs k1 < k2"));
                }
            }
        }
        if let Some(rec) = &self.recovery {
            match rec.kind {
                RecoveryKind::Ii => {
                    rec.method.parse::<BoundaryMethod>()?;
                }
                _ => {
                    rec.method.parse::<RicciMethod>()?;
                }
            }
            match rec.kind {
                RecoveryKind::PinchScan => {
                    let s = rec.scan.ok_or_else(|| invalid("pinch_scan needs `scan`"))?;
                    if s.n_points == 0 || s.n_directions == 0 {
                        return Err(invalid("scan needs points and directions"));
                    }
                }
                _ => {
                    let p = rec.point.as_ref().ok_or_else(|| invalid("recovery needs `point`"))?;
                    point_vector(&model, p)?;
                    if rec.direction.is_none() {
                        return Err(invalid("recovery needs `direction`"));
                    }
                }
            }
            if rec.kind == RecoveryKind::Evolving && self.evolving.is_none() {
                return Err(invalid("evolving recovery needs an `evolving` metric"));
            }
            if rec.kind == RecoveryKind::Ii && !model.has_boundary() {
                return Err(invalid("ii recovery needs a model with boundary"));
            }
            if let Some(g) = &rec.t_grid {
                if g.len() < 3 {
                    return Err(Error::GridTooCoarse(g.len()));
                }
            }
        }
        Ok(())
    }
}
