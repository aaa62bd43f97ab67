//! Empirical decay rates of `sigma_n` and comparison with the predicted laws.
//!
//! Fits `ln sigma_n = C - r ln n - s ln ln(n + 1)` by least squares.

use serde::Serialize;

use crate::bounds::{class_error_infty, default_m_max, BoundsEngine, TailPolicy, TailStatus};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::weights::{RatePrediction, WeightModel};

/// Which exponents are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateModel {
    /// `s = 0`, fit `r` only.
    PolyOnly,
    /// Fit `r` and `s` jointly. Poorly conditioned on short grids.
    PolyLog,
    /// `s` held at the given value, fit `r` only.
    FixedLog { s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub poly_exponent: f64,
    pub log_exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual_rms: f64,
    pub grid: Vec<usize>,
}

/// Minimum number of samples accepted by [`fit_rate`].
pub const MIN_SAMPLES: usize = 8;

fn lnln(n: usize) -> f64 {
    ((n + 1) as f64).ln().ln()
}

pub fn fit_rate(samples: &[(usize, f64)], model: RateModel) -> Result<RateFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::domain(format!(
            "rate fit needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples[0].0 == 0 || samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::domain("sample grid must be strictly increasing with n >= 1"));
    }
    if let Some(&(n, v)) = samples.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::domain(format!("sigma must be finite and positive, got {v} at n = {n}")));
    }
    let len = samples.len() as f64;
    let x1: Vec<f64> = samples.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let x2: Vec<f64> = samples.iter().map(|&(n, _)| lnln(n)).collect();
    let fixed_s = match model {
        RateModel::PolyOnly => Some(0.0),
        RateModel::FixedLog { s } => Some(s),
        RateModel::PolyLog => None,
    };
    // the fixed log term moves to the response
    let y: Vec<f64> = samples
        .iter()
        .zip(&x2)
        .map(|(&(_, v), l)| v.ln() + fixed_s.unwrap_or(0.0) * l)
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / len;
    let (m1, m2, my) = (mean(&x1), mean(&x2), mean(&y));
    let c1: Vec<f64> = x1.iter().map(|v| v - m1).collect();
    let c2: Vec<f64> = x2.iter().map(|v| v - m2).collect();
    let cy: Vec<f64> = y.iter().map(|v| v - my).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let s11 = dot(&c1, &c1);
    let (r, s) = match fixed_s {
        Some(s) => {
            if s11 <= 0.0 {
                return Err(Error::Rank("ln n has no spread over the grid".into()));
            }
            (-dot(&c1, &cy) / s11, s)
        }
        None => {
            let s22 = dot(&c2, &c2);
            let s12 = dot(&c1, &c2);
            let det = s11 * s22 - s12 * s12;
            if det.is_nan() || det <= 1e-12 * s11 * s22 {
                return Err(Error::Rank("ln n and ln ln(n+1) are collinear over the grid".into()));
            }
            let b1 = dot(&c1, &cy);
            let b2 = dot(&c2, &cy);
            (-(s22 * b1 - s12 * b2) / det, -(s11 * b2 - s12 * b1) / det)
        }
    };
    let intercept = my + r * m1 + if fixed_s.is_none() { s * m2 } else { 0.0 };
    let sse: f64 = samples
        .iter()
        .zip(x1.iter().zip(&x2))
        .map(|(&(_, v), (a, b))| {
            let e = v.ln() - (intercept - r * a - s * b);
            e * e
        })
        .sum();
    Ok(RateFit {
        poly_exponent: r,
        log_exponent: s,
        intercept,
        residual_rms: (sse / len).sqrt(),
        grid: samples.iter().map(|&(n, _)| n).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub c_min: f64,
    pub c_max: f64,
}

impl Envelope {
    pub fn spread(&self) -> f64 {
        self.c_max / self.c_min
    }
}

/// Range of `sigma_n n^r (log(n+1))^s` over the samples.
pub fn ratio_envelope(samples: &[(usize, f64)], prediction: &RatePrediction) -> Result<Envelope> {
    if !prediction.valid {
        return Err(Error::NotApplicable(format!(
            "prediction requires {}",
            prediction.validity_condition
        )));
    }
    if samples.is_empty() {
        return Err(Error::domain("no samples"));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(n, v) in samples {
        let nf = n as f64;
        let c = v * nf.powf(prediction.poly_exponent) * (nf + 1.0).ln().powf(prediction.log_exponent);
        lo = lo.min(c);
        hi = hi.max(c);
    }
    Ok(Envelope { c_min: lo, c_max: hi })
}

/// `2^lo, 2^(lo+1), ..., 2^hi`.
pub fn dyadic_grid(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

/// `sigma_n` on `grid`: `sqrt(upper_sq)` of the bounds engine with
/// `m_max = max(1024, 64 n)`, or the exact tail for `p = inf`.
pub fn bound_samples(w: &WeightModel, p: Exponent, grid: &[usize]) -> Result<Vec<(usize, f64)>> {
    match p {
        Exponent::Finite(_) => {
            let mut engine = BoundsEngine::new(w, p)?;
            grid.iter()
                .map(|&n| {
                    let r = engine.bounds(n, default_m_max(n))?;
                    Ok((n, r.upper_sq.sqrt()))
                })
                .collect()
        }
        Exponent::Infinite => {
            let policy = TailPolicy::default();
            grid.iter()
                .map(|&n| {
                    let r = class_error_infty(w, n, &policy)?;
                    if r.status == TailStatus::Divergent {
                        return Err(Error::NotApplicable(format!("tail sum diverges for {w}")));
                    }
                    Ok((n, r.value_sq.sqrt()))
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(r: f64, s: f64, grid: &[usize]) -> Vec<(usize, f64)> {
        grid.iter()
            .map(|&n| (n, 3.0 * (n as f64).powf(-r) * ((n + 1) as f64).ln().powf(-s)))
            .collect()
    }

    #[test]
    fn recovers_power_law() {
        let samples: Vec<_> = dyadic_grid(6, 16).into_iter().map(|n| (n, (n as f64).powf(-0.5))).collect();
        let f = fit_rate(&samples, RateModel::PolyOnly).unwrap();
        assert!((f.poly_exponent - 0.5).abs() < 1e-10);
        assert_eq!(f.log_exponent, 0.0);
        assert!(f.residual_rms < 1e-12);
        assert!(f.intercept.abs() < 1e-10);
    }

    #[test]
    fn recovers_poly_log_law() {
        let grid = dyadic_grid(6, 16);
        let f = fit_rate(&law(1.0, 1.0, &grid), RateModel::PolyLog).unwrap();
        assert!((f.poly_exponent - 1.0).abs() < 1e-8, "{f:?}");
        assert!((f.log_exponent - 1.0).abs() < 1e-8, "{f:?}");
        assert!((f.intercept - 3f64.ln()).abs() < 1e-8);
        let f = fit_rate(&law(0.7, 2.0, &grid), RateModel::FixedLog { s: 2.0 }).unwrap();
        assert!((f.poly_exponent - 0.7).abs() < 1e-10);
    }

    #[test]
    fn log_term_never_increases_residual() {
        let grid = dyadic_grid(3, 14);
        let noisy: Vec<_> = law(0.6, 0.4, &grid)
            .into_iter()
            .enumerate()
            .map(|(i, (n, v))| (n, v * (1.0 + 0.05 * ((i * 7 % 5) as f64 - 2.0))))
            .collect();
        let a = fit_rate(&noisy, RateModel::PolyOnly).unwrap();
        let b = fit_rate(&noisy, RateModel::PolyLog).unwrap();
        assert!(b.residual_rms <= a.residual_rms + 1e-15);
    }

    #[test]
    fn rejects_bad_samples() {
        let grid = dyadic_grid(1, 10);
        let mut s = law(1.0, 0.0, &grid);
        s[3].1 = 0.0;
        assert!(matches!(fit_rate(&s, RateModel::PolyOnly), Err(Error::Domain(_))));
        let s = law(1.0, 0.0, &grid[..5]);
        assert!(matches!(fit_rate(&s, RateModel::PolyOnly), Err(Error::Domain(_))));
        let mut s = law(1.0, 0.0, &grid);
        s.swap(2, 3);
        assert!(matches!(fit_rate(&s, RateModel::PolyOnly), Err(Error::Domain(_))));
    }

    #[test]
    fn envelope_of_exact_law_is_flat() {
        let grid = dyadic_grid(6, 16);
        let pred = RatePrediction {
            poly_exponent: 0.8,
            log_exponent: 1.5,
            valid: true,
            validity_condition: String::new(),
        };
        let e = ratio_envelope(&law(0.8, 1.5, &grid), &pred).unwrap();
        assert!((e.spread() - 1.0).abs() < 1e-12);
        assert!((e.c_min - 3.0).abs() < 1e-12);
        let invalid = RatePrediction { valid: false, ..pred };
        assert!(ratio_envelope(&law(0.8, 1.5, &grid), &invalid).is_err());
    }

    #[test]
    fn stechkin_rate_from_bounds() {
        let w = WeightModel::constant();
        let grid = dyadic_grid(6, 16);
        let samples = bound_samples(&w, Exponent::Finite(1.0), &grid).unwrap();
        let f = fit_rate(&samples, RateModel::PolyOnly).unwrap();
        assert!((0.45..=0.55).contains(&f.poly_exponent), "{f:?}");
        let pred = w.predicted_rate(Exponent::Finite(1.0)).unwrap();
        assert!(ratio_envelope(&samples, &pred).unwrap().spread() <= 4.0);
    }

    #[test]
    fn log_power_envelope_is_bounded() {
        let w = WeightModel::log_power(1.0).unwrap();
        let grid = dyadic_grid(6, 16);
        let samples = bound_samples(&w, Exponent::Finite(1.0), &grid).unwrap();
        let pred = w.predicted_rate(Exponent::Finite(1.0)).unwrap();
        let e = ratio_envelope(&samples, &pred).unwrap();
        assert!(e.spread() <= 8.0, "{e:?}");
    }

    #[test]
    fn infinite_exponent_samples() {
        let grid = dyadic_grid(6, 16);
        let s = bound_samples(&WeightModel::pow_log(1.0, 0.0).unwrap(), Exponent::Infinite, &grid).unwrap();
        let f = fit_rate(&s, RateModel::PolyOnly).unwrap();
        assert!((f.poly_exponent - 0.5).abs() < 0.05);
        assert!(bound_samples(&WeightModel::constant(), Exponent::Infinite, &grid).is_err());
    }
}
