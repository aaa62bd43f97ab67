//! Prefix sums `W_m^p = w_1^p + ... + w_m^p`.

use crate::error::{Error, Result};
use crate::summation::{log_add_exp, NeumaierSum};
use crate::weights::WeightModel;

/// Exponent of `e` above which the table switches to log-domain storage.
const LOG_DOMAIN_THRESHOLD: f64 = 700.0;

#[derive(Debug, Clone)]
enum Storage {
    /// `sums[m] = W_m^p`, compensated.
    Linear(Vec<f64>),
    /// `ln_sums[m] = ln W_m^p`.
    Log(Vec<f64>),
}

/// Table of `W_m^p` for `0 <= m <= len`, together with `w_1..=w_len`.
#[derive(Debug, Clone)]
pub struct CumulativeWeightTable {
    p: f64,
    weights: Vec<f64>,
    storage: Storage,
}

impl CumulativeWeightTable {
    /// Builds the table up to `len` (`len >= 1`) for a finite exponent `p`.
    ///
    /// Tabulated models shorter than `len` yield [`Error::Truncated`].
    pub fn build(w: &WeightModel, p: f64, len: usize) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::domain(format!("cumulative weights need 0 < p < inf, got {p}")));
        }
        if len == 0 {
            return Err(Error::domain("cumulative weight table needs at least one entry"));
        }
        let weights = w.values(len)?;
        let max_ln = weights.iter().fold(0.0f64, |acc, &v| acc.max(v.ln()));
        let storage = if p * max_ln + (len as f64).ln() > LOG_DOMAIN_THRESHOLD {
            let mut ln_sums = Vec::with_capacity(len + 1);
            ln_sums.push(f64::NEG_INFINITY);
            let mut acc = f64::NEG_INFINITY;
            for &v in &weights {
                acc = log_add_exp(acc, p * v.ln());
                ln_sums.push(acc);
            }
            Storage::Log(ln_sums)
        } else {
            let mut sums = Vec::with_capacity(len + 1);
            sums.push(0.0);
            let mut acc = NeumaierSum::new();
            for &v in &weights {
                acc += pow(v, p);
                sums.push(acc.value());
            }
            Storage::Linear(sums)
        };
        Ok(CumulativeWeightTable { p, weights, storage })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Largest `m` with a tabulated `W_m`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_log_domain(&self) -> bool {
        matches!(self.storage, Storage::Log(_))
    }

    /// `w_j`, `1 <= j <= len`.
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j - 1]
    }

    /// `W_m^p`; `+inf` if it is not representable.
    #[inline]
    pub fn power_sum(&self, m: usize) -> f64 {
        match &self.storage {
            Storage::Linear(s) => s[m],
            Storage::Log(l) => l[m].exp(),
        }
    }

    /// `ln W_m^p`.
    #[inline]
    pub fn ln_power_sum(&self, m: usize) -> f64 {
        match &self.storage {
            Storage::Linear(s) => s[m].ln(),
            Storage::Log(l) => l[m],
        }
    }

    /// `W_m`.
    #[inline]
    pub fn cumulative(&self, m: usize) -> f64 {
        match &self.storage {
            Storage::Linear(s) => root(s[m], self.p),
            Storage::Log(l) => (l[m] / self.p).exp(),
        }
    }

    /// `W_m^{-1}`.
    #[inline]
    pub fn inv(&self, m: usize) -> f64 {
        match &self.storage {
            Storage::Linear(s) => 1.0 / root(s[m], self.p),
            Storage::Log(l) => (-l[m] / self.p).exp(),
        }
    }

    /// `W_m^{-2}`.
    #[inline]
    pub fn inv_sq(&self, m: usize) -> f64 {
        match &self.storage {
            Storage::Linear(s) => {
                let s = s[m];
                if self.p == 2.0 {
                    1.0 / s
                } else if self.p == 1.0 {
                    1.0 / (s * s)
                } else {
                    s.powf(-2.0 / self.p)
                }
            }
            Storage::Log(l) => (-2.0 * l[m] / self.p).exp(),
        }
    }
}

/// `x^p` with exact fast paths for the common exponents.
#[inline]
pub(crate) fn pow(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

/// `x^{1/p}`.
#[inline]
pub(crate) fn root(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x.sqrt()
    } else if p == 0.5 {
        x * x
    } else {
        x.powf(1.0 / p)
    }
}
