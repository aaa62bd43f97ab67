use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Summability exponent `p` of the weighted space, `0 < p <= inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_nan() || p <= 0.0 {
            return Err(Error::domain(format!("exponent p must be positive, got {p}")));
        }
        if p.is_infinite() {
            return Ok(Exponent::Infinite);
        }
        Ok(Exponent::Finite(p))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// The finite value, or `None` for `p = inf`.
    pub fn as_finite(&self) -> Option<f64> {
        match *self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinite => None,
        }
    }

    /// `1/p`, zero for `p = inf`.
    pub fn reciprocal(&self) -> f64 {
        match *self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinite => 0.0,
        }
    }

    pub(crate) fn require_finite(&self, op: &str) -> Result<f64> {
        self.as_finite()
            .ok_or_else(|| Error::domain(format!("{op} requires a finite exponent p")))
    }
}

impl TryFrom<f64> for Exponent {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Exponent::finite(p)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" | "∞" => return Ok(Exponent::Infinite),
            _ => {}
        }
        let p: f64 = t
            .parse()
            .map_err(|_| Error::parse("exponent", s, "expected a positive number or `inf`"))?;
        Exponent::finite(p).map_err(|e| Error::parse("exponent", s, e.to_string()))
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Exponent::Finite(p) => serializer.serialize_f64(p),
            Exponent::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(p) => Exponent::finite(p).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_finite_and_infinite() {
        assert_eq!("1.5".parse::<Exponent>().unwrap(), Exponent::Finite(1.5));
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinite);
        assert_eq!("Infinity".parse::<Exponent>().unwrap(), Exponent::Infinite);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!("0".parse::<Exponent>().is_err());
        assert!("-2".parse::<Exponent>().is_err());
        assert!("nan".parse::<Exponent>().is_err());
        assert!(Exponent::finite(0.0).is_err());
    }

    #[test]
    fn display_roundtrips() {
        for p in [Exponent::Finite(0.5), Exponent::Finite(2.0), Exponent::Infinite] {
            assert_eq!(p.to_string().parse::<Exponent>().unwrap(), p);
        }
    }
}
