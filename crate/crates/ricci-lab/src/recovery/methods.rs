use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interior limits: `i(p)` gradient power, `ii(p)` Poincaré, `iii` entropy,
/// and the two pairing limits `iv-a`, `iv-b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RicciMethod {
    Grad { p: f64 },
    Poincare { p: f64 },
    Entropy,
    PairingA,
    PairingB,
}

impl RicciMethod {
    pub(crate) fn uses_ladder(&self) -> bool {
        matches!(self, RicciMethod::Poincare { .. } | RicciMethod::Entropy)
    }

    pub(crate) fn exponent(&self) -> f64 {
        match self {
            RicciMethod::Grad { p } | RicciMethod::Poincare { p } => *p,
            _ => 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RicciMethod::Grad { p } if !(p > 0.0 && p.is_finite()) => {
                Err(Error::InvalidArgument(format!("gradient power needs p > 0, got {p}")))
            }
            RicciMethod::Poincare { p } if !(p > 1.0 && p <= 2.0) => {
                Err(Error::InvalidArgument(format!("Poincaré limit needs p in (1, 2], got {p}")))
            }
            _ => Ok(()),
        }
    }
}

/// Boundary limits: `grad-p(p)`, `pairing-a`, `pairing-b` and `variance(p)`
/// with `p ∈ [1, 2]` (`p = 1` is the entropy form).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BoundaryMethod {
    GradP { p: f64 },
    PairingA,
    PairingB,
    Variance { p: f64 },
}

impl BoundaryMethod {
    pub(crate) fn exponent(&self) -> f64 {
        match self {
            BoundaryMethod::GradP { p } | BoundaryMethod::Variance { p } => *p,
            _ => 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BoundaryMethod::GradP { p } if !(p > 0.0 && p.is_finite()) => {
                Err(Error::InvalidArgument(format!("gradient power needs p > 0, got {p}")))
            }
            BoundaryMethod::Variance { p } if !(1.0..=2.0).contains(&p) => {
                Err(Error::InvalidArgument(format!("variance limit needs p in [1, 2], got {p}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for RicciMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RicciMethod::Grad { p } => write!(f, "i({p})"),
            RicciMethod::Poincare { p } => write!(f, "ii({p})"),
            RicciMethod::Entropy => f.write_str("iii"),
            RicciMethod::PairingA => f.write_str("iv-a"),
            RicciMethod::PairingB => f.write_str("iv-b"),
        }
    }
}

impl fmt::Display for BoundaryMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryMethod::GradP { p } => write!(f, "grad-p({p})"),
            BoundaryMethod::PairingA => f.write_str("pairing-a"),
            BoundaryMethod::PairingB => f.write_str("pairing-b"),
            BoundaryMethod::Variance { p } => write!(f, "variance({p})"),
        }
    }
}

/// `name(p)` → `(name, Some(p))`, `name` → `(name, None)`.
fn split(s: &str) -> Result<(&str, Option<f64>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s, None)),
        Some(i) => {
            let inner = s[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::InvalidArgument(format!("unbalanced method name {s:?}")))?;
            let p = inner
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad exponent in {s:?}")))?;
            Ok((&s[..i], Some(p)))
        }
    }
}

impl FromStr for RicciMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let m = match split(s)? {
            ("i", p) => RicciMethod::Grad { p: p.unwrap_or(2.0) },
            ("ii", p) => RicciMethod::Poincare { p: p.unwrap_or(2.0) },
            ("iii", None) => RicciMethod::Entropy,
            ("iv-a", None) => RicciMethod::PairingA,
            ("iv-b", None) => RicciMethod::PairingB,
            _ => return Err(Error::InvalidArgument(format!("unknown recovery method {s:?}"))),
        };
        m.validate()?;
        Ok(m)
    }
}

impl FromStr for BoundaryMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let m = match split(s)? {
            ("grad-p", p) => BoundaryMethod::GradP { p: p.unwrap_or(2.0) },
            ("pairing-a", None) => BoundaryMethod::PairingA,
            ("pairing-b", None) => BoundaryMethod::PairingB,
            ("variance", p) => BoundaryMethod::Variance { p: p.unwrap_or(2.0) },
            _ => return Err(Error::InvalidArgument(format!("unknown boundary method {s:?}"))),
        };
        m.validate()?;
        Ok(m)
    }
}

macro_rules! string_conversions {
    ($t:ty) => {
        impl TryFrom<String> for $t {
            type Error = Error;
            fn try_from(s: String) -> Result<Self> {
                s.parse()
            }
        }

        impl From<$t> for String {
            fn from(m: $t) -> String {
                m.to_string()
            }
        }
    };
}

string_conversions!(RicciMethod);
string_conversions!(BoundaryMethod);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in [
            RicciMethod::Grad { p: 1.5 },
            RicciMethod::Poincare { p: 2.0 },
            RicciMethod::Entropy,
            RicciMethod::PairingA,
            RicciMethod::PairingB,
        ] {
            assert_eq!(m.to_string().parse::<RicciMethod>().unwrap(), m);
        }
        for m in [
            BoundaryMethod::GradP { p: 2.0 },
            BoundaryMethod::PairingA,
            BoundaryMethod::PairingB,
            BoundaryMethod::Variance { p: 1.0 },
        ] {
            assert_eq!(m.to_string().parse::<BoundaryMethod>().unwrap(), m);
        }
        assert!("ii(2.5)".parse::<RicciMethod>().is_err());
        assert!("variance(0.5)".parse::<BoundaryMethod>().is_err());
        assert!("v".parse::<RicciMethod>().is_err());
        assert_eq!("i".parse::<RicciMethod>().unwrap(), RicciMethod::Grad { p: 2.0 });
    }
}
