use std::fmt;

use serde::{Deserialize, Serialize};

/// Which inequality a report checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// `|∇P_t f|² ≤ e^{−2k₁t} P_t|∇f|²` alone (right-hand side 0).
    GradEstimate,
    Grad,
    GradPrime,
    Poincare(f64),
    PoincarePrime(f64),
    LogSob,
    LogSobPrime,
    Sharp,
}

impl Family {
    /// The six families checked by a suite, with Poincaré exponent `p`.
    pub fn suite(p: f64) -> [Family; 6] {
        [
            Family::Grad,
            Family::GradPrime,
            Family::Poincare(p),
            Family::PoincarePrime(p),
            Family::LogSob,
            Family::LogSobPrime,
        ]
    }

    pub fn needs_positive_f(&self) -> bool {
        matches!(
            self,
            Family::Poincare(_) | Family::PoincarePrime(_) | Family::LogSob | Family::LogSobPrime
        )
    }

    pub fn needs_branches(&self) -> bool {
        matches!(self, Family::PoincarePrime(_) | Family::LogSobPrime)
    }

    pub fn exponent(&self) -> Option<f64> {
        match self {
            Family::Poincare(p) | Family::PoincarePrime(p) => Some(*p),
            _ => None,
        }
    }

    /// Family name without parameters, used to group plots.
    pub fn base_name(&self) -> &'static str {
        match self {
            Family::GradEstimate => "grad_estimate",
            Family::Grad => "grad",
            Family::GradPrime => "grad'",
            Family::Poincare(_) => "poincare",
            Family::PoincarePrime(_) => "poincare'",
            Family::LogSob => "logsob",
            Family::LogSobPrime => "logsob'",
            Family::Sharp => "sharp",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        let s = s.trim();
        let param = |prefix: &str| -> Option<f64> {
            s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?.parse().ok()
        };
        Some(match s {
            "grad_estimate" => Family::GradEstimate,
            "grad" => Family::Grad,
            "grad'" => Family::GradPrime,
            "logsob" => Family::LogSob,
            "logsob'" => Family::LogSobPrime,
            "sharp" => Family::Sharp,
            _ => {
                if let Some(p) = param("poincare'") {
                    Family::PoincarePrime(p)
                } else {
                    Family::Poincare(param("poincare")?)
                }
            }
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exponent() {
            Some(p) => write!(f, "{}({})", self.base_name(), p),
            None => f.write_str(self.base_name()),
        }
    }
}

impl Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Family {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Family::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown family {s:?}")))
    }
}

/// Setting of the inequality: static manifold, manifold with boundary, or
/// evolving metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Static,
    Boundary,
    Evolving,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem::Static => "static",
            Theorem::Boundary => "boundary",
            Theorem::Evolving => "evolving",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "HOLDS",
            Verdict::Violated => "VIOLATED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Verdict threshold in standard errors.
pub const Z: f64 = 3.0;

/// `HOLDS` iff `margin ≥ −z·SE` (less a rounding floor for exact equality
/// cases), `VIOLATED` otherwise; flagged estimates are `INCONCLUSIVE`.
pub fn verdict(lhs: f64, rhs: f64, margin: f64, se_margin: f64, z: f64, flagged: bool) -> Verdict {
    if flagged || !(margin.is_finite() && se_margin.is_finite()) {
        return Verdict::Inconclusive;
    }
    let floor = 1e-9 * (1.0 + lhs.abs() + rhs.abs());
    if margin >= -z * se_margin - floor {
        Verdict::Holds
    } else {
        Verdict::Violated
    }
}

/// Side information kept with a report but not serialized.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub exclusion_fraction: f64,
    /// Sample value of `E e^{−2.5 𝒦₁}`.
    pub moment: f64,
    /// Increment hashes behind the two sides (equal under common random numbers).
    pub checksum_lhs: u64,
    pub checksum_rhs: u64,
    pub note: String,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub id: String,
    pub family: Family,
    pub theorem: Theorem,
    #[serde(with = "nullable")]
    pub lhs: f64,
    #[serde(with = "nullable")]
    pub rhs: f64,
    #[serde(with = "nullable")]
    pub se_lhs: f64,
    #[serde(with = "nullable")]
    pub se_rhs: f64,
    #[serde(with = "nullable")]
    pub margin: f64,
    #[serde(with = "nullable")]
    pub se_margin: f64,
    pub verdict: Verdict,
    pub n_paths: usize,
    pub seed: u64,
    pub config_hash: String,
    #[serde(skip)]
    pub diagnostics: Diagnostics,
}

/// Non-finite values are written as `null` and read back as NaN.
pub(crate) mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Parses a JSON array of reports.
pub fn read_reports(text: &str) -> crate::Result<Vec<InequalityReport>> {
    serde_json::from_str(text).map_err(|e| crate::Error::Decode(e.to_string()))
}

/// Pretty JSON array of reports, as written to `reports.json`.
pub fn write_reports(reports: &[InequalityReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports are serializable") + "\n"
}

pub const CSV_HEADER: [&str; 13] = [
    "id", "family", "theorem", "lhs", "rhs", "se_lhs", "se_rhs", "margin", "se_margin", "verdict",
    "n_paths", "seed", "config_hash",
];

impl InequalityReport {
    pub fn csv_record(&self) -> [String; 13] {
        [
            self.id.clone(),
            self.family.to_string(),
            self.theorem.to_string(),
            fmt_f64(self.lhs),
            fmt_f64(self.rhs),
            fmt_f64(self.se_lhs),
            fmt_f64(self.se_rhs),
            fmt_f64(self.margin),
            fmt_f64(self.se_margin),
            self.verdict.to_string(),
            self.n_paths.to_string(),
            self.seed.to_string(),
            self.config_hash.clone(),
        ]
    }
}

/// Shortest round-trip representation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_round_trip() {
        for f in [
            Family::GradEstimate,
            Family::Grad,
            Family::GradPrime,
            Family::Poincare(1.5),
            Family::PoincarePrime(2.0),
            Family::LogSob,
            Family::LogSobPrime,
            Family::Sharp,
        ] {
            assert_eq!(Family::parse(&f.to_string()), Some(f));
        }
        assert_eq!(Family::parse("poincare(x)"), None);
    }

    #[test]
    fn non_finite_values_survive_json() {
        let r = InequalityReport {
            id: "static/sharp/t=1".into(),
            family: Family::Sharp,
            theorem: Theorem::Static,
            lhs: -0.5,
            rhs: f64::NAN,
            se_lhs: 0.01,
            se_rhs: f64::NAN,
            margin: f64::NAN,
            se_margin: f64::NAN,
            verdict: Verdict::Inconclusive,
            n_paths: 100,
            seed: 7,
            config_hash: "00ff".into(),
            diagnostics: Diagnostics::default(),
        };
        let text = serde_json::to_string(&vec![r.clone()]).unwrap();
        assert!(text.contains("\"rhs\":null"));
        let back = read_reports(&text).unwrap();
        assert_eq!(back[0].lhs, r.lhs);
        assert!(back[0].rhs.is_nan());
        assert!(read_reports("[{}]").is_err());
    }

    #[test]
    fn verdict_rule() {
        assert_eq!(verdict(0.0, 0.0, 0.0, 0.0, Z, false), Verdict::Holds);
        assert_eq!(verdict(1.0, 0.0, -1e-12, 0.0, Z, false), Verdict::Holds);
        assert_eq!(verdict(0.1, 0.0, -0.1, 0.03, Z, false), Verdict::Violated);
        assert_eq!(verdict(0.1, 0.0, -0.1, 0.04, Z, false), Verdict::Holds);
        assert_eq!(verdict(0.1, 0.0, -0.1, 0.04, Z, true), Verdict::Inconclusive);
        assert_eq!(verdict(0.1, f64::NAN, f64::NAN, 0.04, Z, false), Verdict::Inconclusive);
    }
}
