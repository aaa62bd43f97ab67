//! Concrete coefficient sequences: rearrangement, weighted norms and the
//! exact n-term error in `l2`.

use serde::Serialize;

use crate::cumulative::{pow, root, CumulativeWeightTable};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::summation::NeumaierSum;
use crate::weights::WeightModel;

/// A finitely supported real sequence `(x_1, ..., x_L, 0, 0, ...)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CoefficientSequence {
    entries: Vec<f64>,
}

impl CoefficientSequence {
    /// Entries must be finite and there must be at least one.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain("a coefficient sequence needs at least one entry"));
        }
        if let Some(j) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("entry {} is not finite", j + 1)));
        }
        Ok(CoefficientSequence { entries })
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty());
        CoefficientSequence { entries }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// `x_j` for 1-based `j`; zero past the stored support.
    pub fn get(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.entries.get(j - 1).copied().unwrap_or(0.0)
    }

    /// True if `|x_1| >= |x_2| >= ...`.
    pub fn is_nonincreasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].abs() >= w[1].abs())
    }
}

/// Decreasing rearrangement `x*` of `|x|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rearranged {
    /// `x*_1 >= x*_2 >= ... >= 0`.
    pub values: Vec<f64>,
    /// `source_perm[r]` is the 0-based position in `x` of rank `r`.
    pub source_perm: Vec<usize>,
}

impl Rearranged {
    pub fn to_sequence(&self) -> CoefficientSequence {
        CoefficientSequence::from_vec_unchecked(self.values.clone())
    }
}

/// Sorts `|x|` nonincreasingly; ties keep their original order.
pub fn decreasing_rearrangement(x: &CoefficientSequence) -> Rearranged {
    let mut perm: Vec<usize> = (0..x.entries.len()).collect();
    // sort_by is stable, which gives the ascending-index tie-break
    perm.sort_by(|&a, &b| x.entries[b].abs().total_cmp(&x.entries[a].abs()));
    let values = perm.iter().map(|&i| x.entries[i].abs()).collect();
    Rearranged {
        values,
        source_perm: perm,
    }
}

fn sorted_magnitudes(x: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = x.iter().map(|e| e.abs()).collect();
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    v
}

/// `||x||_{lp(w)}`: `(sum |w_j x_j|^p)^{1/p}` or `max_j w_j |x_j|` for `p = inf`.
pub fn weighted_lp_norm(x: &CoefficientSequence, w: &WeightModel, p: Exponent) -> Result<f64> {
    let weights = w.values(x.support_len())?;
    Ok(weighted_norm_with(&x.entries, &weights, p))
}

/// Weighted norm against an explicit weight slice (`weights.len() >= x.len()`).
pub(crate) fn weighted_norm_with(x: &[f64], weights: &[f64], p: Exponent) -> f64 {
    let scaled = x.iter().zip(weights).map(|(xj, wj)| (wj * xj).abs());
    match p {
        Exponent::Infinite => scaled.fold(0.0, f64::max),
        Exponent::Finite(p) => {
            let top = x
                .iter()
                .zip(weights)
                .map(|(xj, wj)| (wj * xj).abs())
                .fold(0.0, f64::max);
            if top == 0.0 {
                return 0.0;
            }
            // normalise by the largest term so that huge weights cannot overflow
            let s: NeumaierSum = scaled.map(|a| pow(a / top, p)).collect();
            top * root(s.value(), p)
        }
    }
}

/// `sigma_n(x)^2 = sum_{j > n} (x*_j)^2`, summed from the smallest entry upward.
pub fn sigma_n_sq(x: &CoefficientSequence, n: usize) -> f64 {
    tail_energy(&sorted_magnitudes(&x.entries), n)
}

/// `sigma_n(x)`; `sigma_0` is the full `l2` norm and `sigma_n = 0` for `n >= support_len`.
pub fn sigma_n_exact(x: &CoefficientSequence, n: usize) -> f64 {
    sigma_n_sq(x, n).sqrt()
}

/// `sum_{j > n} v_j^2` for a nonincreasing slice `v`.
pub(crate) fn tail_energy(sorted: &[f64], n: usize) -> f64 {
    if n >= sorted.len() {
        return 0.0;
    }
    let mut acc = NeumaierSum::new();
    for v in sorted[n..].iter().rev() {
        acc += v * v;
    }
    acc.value()
}

/// `[sigma_0(x)^2, sigma_1(x)^2, ..., sigma_L(x)^2]` with `L = support_len`.
///
/// Same summation order as [`sigma_n_sq`], so entries agree with it bit for bit.
pub fn tail_energy_profile(x: &CoefficientSequence) -> Vec<f64> {
    let sorted = sorted_magnitudes(&x.entries);
    let mut out = vec![0.0; sorted.len() + 1];
    let mut acc = NeumaierSum::new();
    for (k, v) in sorted.iter().enumerate().rev() {
        acc += v * v;
        out[k] = acc.value();
    }
    out
}

/// The sequence `s^(m)`: `m` entries equal to `W_m^{-1}` followed by zeros.
/// It has unit `lp(w)` norm and `sigma_n(s^(m))^2 = (m - n) W_m^{-2}`.
pub fn extremal_sequence(w: &WeightModel, p: Exponent, m: usize) -> Result<CoefficientSequence> {
    let p = p.require_finite("extremal_sequence")?;
    if m == 0 {
        return Err(Error::domain("extremal sequence needs m >= 1"));
    }
    let table = CumulativeWeightTable::build(w, p, m)?;
    Ok(extremal_from_table(&table, m))
}

pub(crate) fn extremal_from_table(table: &CumulativeWeightTable, m: usize) -> CoefficientSequence {
    CoefficientSequence::from_vec_unchecked(vec![table.inv(m); m])
}

/// Replaces the first `n` entries of a rearranged sequence with `x*_n`.
///
/// Leaves `sigma_n` unchanged and does not increase any `lp(w)` norm with
/// nondecreasing weights.
pub fn flatten_head(x: &CoefficientSequence, n: usize) -> Result<CoefficientSequence> {
    if n == 0 {
        return Err(Error::domain("flatten_head needs n >= 1"));
    }
    if !x.is_nonincreasing() {
        return Err(Error::domain("flatten_head expects a nonincreasing (rearranged) sequence"));
    }
    let level = x.get(n).abs();
    let entries = x
        .entries
        .iter()
        .enumerate()
        .map(|(i, v)| if i < n { level } else { v.abs() })
        .collect();
    Ok(CoefficientSequence::from_vec_unchecked(entries))
}
