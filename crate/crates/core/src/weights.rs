//! Weight sequences `1 <= w_1 <= w_2 <= ...` and the rates they predict.
//!
//! Three closed-form families are built in:
//!
//! * `Constant`: `w_j = 1`, the unweighted `lp` ball.
//! * `LogPower(beta)`: `w_j = (1 + ln j)^beta`, `beta >= 0`.
//! * `PowLog(alpha, beta)`: `w_j = max_{i <= j} i^alpha (log2(i + 1))^beta`,
//!   `alpha >= 0`, any real `beta`.
//!
//! `PowLog` uses the base-2 logarithm so that `w_1 = 1` for every `beta`.
//! The running maximum has a closed form: `phi(x) = x^alpha log2(x+1)^beta`
//! is either nondecreasing or first decreasing and then increasing on
//! `[1, inf)`, so `max_{i <= j} phi(i) = max(phi(1), phi(j)) = max(1, phi(j))`.
//!
//! Arbitrary sequences are supported as `Tabulated` models of finite length.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::Exponent;

/// Raw description of a weight sequence, before validation.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFamily {
    Constant,
    LogPower { beta: f64 },
    PowLog { alpha: f64, beta: f64 },
    Tabulated(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Constant,
    LogPower { beta: f64 },
    PowLog { alpha: f64, beta: f64 },
    Tabulated(Arc<[f64]>),
}

/// A validated, nondecreasing weight sequence with `w_1 >= 1`.
///
/// Evaluation is a pure function of the index; models are cheap to clone
/// and safe to share between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightModel {
    repr: Repr,
}

/// Sample indices used to spot-check closed-form families.
fn sample_grid() -> impl Iterator<Item = usize> {
    let dense = 1..=4096usize;
    let sparse = (13..=40).map(|k| 1usize << k);
    dense.chain(sparse)
}

impl WeightModel {
    pub fn constant() -> Self {
        WeightModel { repr: Repr::Constant }
    }

    pub fn log_power(beta: f64) -> Result<Self> {
        Self::validate(WeightFamily::LogPower { beta })
    }

    pub fn pow_log(alpha: f64, beta: f64) -> Result<Self> {
        Self::validate(WeightFamily::PowLog { alpha, beta })
    }

    pub fn tabulated(weights: Vec<f64>) -> Result<Self> {
        Self::validate(WeightFamily::Tabulated(weights))
    }

    /// Accepts `family` iff `w_1 >= 1` and the sequence is nondecreasing.
    ///
    /// Tabulated sequences are scanned exhaustively. Closed-form families
    /// are checked on their parameters and on a sample grid of indices.
    /// The error names the first violating (1-based) index.
    pub fn validate(family: WeightFamily) -> Result<Self> {
        let repr = match family {
            WeightFamily::Constant => Repr::Constant,
            WeightFamily::LogPower { beta } => {
                if !beta.is_finite() {
                    return Err(Error::domain(format!("logpow beta must be finite, got {beta}")));
                }
                if beta < 0.0 {
                    return Err(Error::InvalidWeights {
                        index: 2,
                        reason: format!("(1 + ln j)^beta decreases for beta = {beta} < 0"),
                    });
                }
                Repr::LogPower { beta }
            }
            WeightFamily::PowLog { alpha, beta } => {
                if !alpha.is_finite() || !beta.is_finite() {
                    return Err(Error::domain(format!(
                        "powlog parameters must be finite, got alpha = {alpha}, beta = {beta}"
                    )));
                }
                if alpha < 0.0 {
                    return Err(Error::domain(format!("powlog alpha must be >= 0, got {alpha}")));
                }
                Repr::PowLog { alpha, beta }
            }
            WeightFamily::Tabulated(values) => {
                check_sequence(values.iter().copied().enumerate().map(|(i, w)| (i + 1, w)))?;
                if values.is_empty() {
                    return Err(Error::InvalidWeights {
                        index: 1,
                        reason: "empty weight table".into(),
                    });
                }
                return Ok(WeightModel {
                    repr: Repr::Tabulated(values.into()),
                });
            }
        };
        let model = WeightModel { repr };
        check_sequence(sample_grid().map(|j| (j, model.value_at(j))))?;
        Ok(model)
    }

    /// `w_j` for a 1-based index `j`.
    pub fn weight_value(&self, j: usize) -> Result<f64> {
        if j == 0 {
            return Err(Error::domain("weight indices start at 1"));
        }
        if let Repr::Tabulated(t) = &self.repr {
            if j > t.len() {
                return Err(Error::Truncated {
                    available: t.len(),
                    requested: j,
                });
            }
        }
        Ok(self.value_at(j))
    }

    /// `w_j` without bounds checks. `j >= 1`; tabulated models must hold `j` entries.
    #[inline]
    pub(crate) fn value_at(&self, j: usize) -> f64 {
        debug_assert!(j >= 1);
        match &self.repr {
            Repr::Constant => 1.0,
            Repr::LogPower { beta } => (1.0 + (j as f64).ln()).powf(*beta),
            Repr::PowLog { alpha, beta } => pow_log_raw(*alpha, *beta, j as f64).max(1.0),
            Repr::Tabulated(t) => t[j - 1],
        }
    }

    /// First `len` weights `w_1..=w_len`.
    pub fn values(&self, len: usize) -> Result<Vec<f64>> {
        if let Some(avail) = self.table_len() {
            if len > avail {
                return Err(Error::Truncated {
                    available: avail,
                    requested: len,
                });
            }
        }
        Ok((1..=len).map(|j| self.value_at(j)).collect())
    }

    /// Number of available weights; `None` for closed-form families.
    pub fn table_len(&self) -> Option<usize> {
        match &self.repr {
            Repr::Tabulated(t) => Some(t.len()),
            _ => None,
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.repr, Repr::Tabulated(_))
    }

    pub fn family_name(&self) -> &'static str {
        match self.repr {
            Repr::Constant => "const",
            Repr::LogPower { .. } => "logpow",
            Repr::PowLog { .. } => "powlog",
            Repr::Tabulated(_) => "tabulated",
        }
    }

    /// `(alpha, beta)` such that `w_j ~ j^alpha (log j)^beta`, for closed forms.
    pub fn growth(&self) -> Option<(f64, f64)> {
        match self.repr {
            Repr::Constant => Some((0.0, 0.0)),
            Repr::LogPower { beta } => Some((0.0, beta)),
            Repr::PowLog { alpha, beta } => Some((alpha, beta)),
            Repr::Tabulated(_) => None,
        }
    }

    /// Raw `(alpha, beta)` of a `PowLog` model.
    pub(crate) fn pow_log_params(&self) -> Option<(f64, f64)> {
        match self.repr {
            Repr::PowLog { alpha, beta } => Some((alpha, beta)),
            _ => None,
        }
    }

    pub(crate) fn log_power_beta(&self) -> Option<f64> {
        match self.repr {
            Repr::LogPower { beta } => Some(beta),
            _ => None,
        }
    }

    /// Index from which `w_j` equals `phi(j)` and `phi` is increasing, for
    /// `PowLog`. Beyond it `w_j^{-2}` is a smooth decreasing function of `j`.
    pub(crate) fn pow_log_monotone_start(&self) -> Option<usize> {
        let (alpha, beta) = self.pow_log_params()?;
        if alpha == 0.0 && beta <= 0.0 {
            return None;
        }
        // sign(d/dx ln phi) = sign(alpha (x+1) ln(x+1) + beta x); convex in x, zero at 0.
        let mut j = 1usize;
        while alpha * ((j + 1) as f64) * ((j + 1) as f64).ln() + beta * j as f64 <= 0.0
            || pow_log_raw(alpha, beta, j as f64) < 1.0
        {
            j = if j < 1 << 20 { j + 1 } else { j * 2 };
            if j > 1 << 50 {
                return None;
            }
        }
        Some(j)
    }

    pub fn predicted_rate(&self, p: Exponent) -> Result<RatePrediction> {
        predicted_rate(self, p)
    }
}

/// `x^alpha (log2(x + 1))^beta`.
#[inline]
pub(crate) fn pow_log_raw(alpha: f64, beta: f64, x: f64) -> f64 {
    x.powf(alpha) * (x + 1.0).log2().powf(beta)
}

fn check_sequence(items: impl Iterator<Item = (usize, f64)>) -> Result<()> {
    let mut prev = 1.0f64;
    for (j, w) in items {
        if !w.is_finite() {
            return Err(Error::InvalidWeights {
                index: j,
                reason: format!("weight {w} is not finite"),
            });
        }
        if j == 1 && w < 1.0 {
            return Err(Error::InvalidWeights {
                index: 1,
                reason: format!("w_1 = {w} < 1"),
            });
        }
        if w < prev {
            return Err(Error::InvalidWeights {
                index: j,
                reason: format!("w_{j} = {w} is smaller than the preceding weight {prev}"),
            });
        }
        prev = w;
    }
    Ok(())
}

impl fmt::Display for WeightModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Constant => f.write_str("const"),
            Repr::LogPower { beta } => write!(f, "logpow:beta={beta}"),
            Repr::PowLog { alpha, beta } => write!(f, "powlog:alpha={alpha},beta={beta}"),
            Repr::Tabulated(t) => write!(f, "tabulated[{}]", t.len()),
        }
    }
}

/// Textual weight specification:
/// `const`, `logpow:beta=<f>`, `powlog:alpha=<f>,beta=<f>` or `file:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Const,
    LogPow { beta: f64 },
    PowLog { alpha: f64, beta: f64 },
    File(PathBuf),
}

impl WeightSpec {
    /// Builds and validates the model, reading the weight file if needed.
    pub fn load(&self) -> Result<WeightModel> {
        match self {
            WeightSpec::Const => Ok(WeightModel::constant()),
            WeightSpec::LogPow { beta } => WeightModel::log_power(*beta),
            WeightSpec::PowLog { alpha, beta } => WeightModel::pow_log(*alpha, *beta),
            WeightSpec::File(path) => WeightModel::tabulated(read_weight_file(path)?),
        }
    }
}

/// Reads a weight table: UTF-8 text, one decimal weight per line, line `k`
/// holding `w_k`. Blank lines and `#` comments are skipped.
pub fn read_weight_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_weight_table(&text)
}

pub fn parse_weight_table(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let w: f64 = line.parse().map_err(|_| {
            Error::parse("weight table", line, format!("line {} is not a number", lineno + 1))
        })?;
        out.push(w);
    }
    Ok(out)
}

fn parse_params(body: &str, spec: &str, names: &[&str]) -> Result<Vec<f64>> {
    let mut found: Vec<Option<f64>> = vec![None; names.len()];
    for part in body.split(',') {
        let (key, val) = part
            .split_once('=')
            .ok_or_else(|| Error::parse("weight spec", spec, format!("expected key=value, got {part:?}")))?;
        let key = key.trim();
        let slot = names
            .iter()
            .position(|n| *n == key)
            .ok_or_else(|| Error::parse("weight spec", spec, format!("unknown parameter {key:?}")))?;
        if found[slot].is_some() {
            return Err(Error::parse("weight spec", spec, format!("duplicate parameter {key:?}")));
        }
        let v: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::parse("weight spec", spec, format!("{key} is not a number")))?;
        if !v.is_finite() {
            return Err(Error::parse("weight spec", spec, format!("{key} must be finite")));
        }
        found[slot] = Some(v);
    }
    found
        .into_iter()
        .zip(names)
        .map(|(v, n)| v.ok_or_else(|| Error::parse("weight spec", spec, format!("missing parameter {n}"))))
        .collect()
}

impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "const" {
            return Ok(WeightSpec::Const);
        }
        let (head, body) = t
            .split_once(':')
            .ok_or_else(|| Error::parse("weight spec", s, "expected const, logpow:, powlog: or file:"))?;
        match head {
            "logpow" => {
                let v = parse_params(body, s, &["beta"])?;
                Ok(WeightSpec::LogPow { beta: v[0] })
            }
            "powlog" => {
                let v = parse_params(body, s, &["alpha", "beta"])?;
                Ok(WeightSpec::PowLog {
                    alpha: v[0],
                    beta: v[1],
                })
            }
            "file" if !body.is_empty() => Ok(WeightSpec::File(PathBuf::from(body))),
            _ => Err(Error::parse("weight spec", s, format!("unknown weight family {head:?}"))),
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Const => f.write_str("const"),
            WeightSpec::LogPow { beta } => write!(f, "logpow:beta={beta}"),
            WeightSpec::PowLog { alpha, beta } => write!(f, "powlog:alpha={alpha},beta={beta}"),
            WeightSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Predicted decay `sigma_n ~ n^{-poly_exponent} (log(n+1))^{-log_exponent}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePrediction {
    pub poly_exponent: f64,
    pub log_exponent: f64,
    /// Whether the hypotheses of the rate statement hold. Exponents are
    /// reported either way.
    pub valid: bool,
    pub validity_condition: String,
}

/// Asymptotic rate of `sigma_n(U(lp(w)))` for the built-in families.
pub fn predicted_rate(w: &WeightModel, p: Exponent) -> Result<RatePrediction> {
    let inv_p = p.reciprocal();
    match w.repr {
        Repr::Constant | Repr::LogPower { .. } => {
            let beta = w.log_power_beta().unwrap_or(0.0);
            let finite_below_two = matches!(p, Exponent::Finite(v) if v < 2.0);
            Ok(RatePrediction {
                poly_exponent: inv_p - 0.5,
                log_exponent: beta,
                valid: beta >= 0.0 && finite_below_two,
                validity_condition: "beta >= 0 and 0 < p < 2".into(),
            })
        }
        Repr::PowLog { alpha, beta } => {
            let poly = alpha + inv_p - 0.5;
            Ok(RatePrediction {
                poly_exponent: poly,
                log_exponent: beta,
                valid: alpha > 0.0 && poly > 0.0,
                validity_condition: if p.is_infinite() {
                    "alpha > 1/2".into()
                } else {
                    "alpha > 0 and alpha + 1/p - 1/2 > 0".into()
                },
            })
        }
        Repr::Tabulated(_) => Err(Error::UnsupportedFamily("tabulated")),
    }
}
