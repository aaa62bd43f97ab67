//! Compensated (Kahan-Babuska / Neumaier) summation.
//!
//! Every long reduction in the crate goes through [`NeumaierSum`]: prefix
//! sums of `w_j^p`, tail energies `sum (x_j*)^2`, and the `p = inf` series.

use std::iter::FromIterator;
use std::ops::AddAssign;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub const fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for NeumaierSum {
    #[inline]
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// `ln(exp(a) + exp(b))` without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms_next_to_large_ones() {
        let mut s = NeumaierSum::new();
        s += 1e100;
        s += 1.0;
        s += -1e100;
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn many_tenths() {
        let naive: f64 = (0..1_000_000).map(|_| 0.1).sum();
        let comp = compensated_sum((0..1_000_000).map(|_| 0.1));
        assert!((comp - 100_000.0).abs() < (naive - 100_000.0).abs());
        assert!((comp - 100_000.0).abs() < 1e-9);
    }

    #[test]
    fn log_add_exp_matches_direct() {
        let direct = (2.0f64.exp() + 3.0f64.exp()).ln();
        assert!((log_add_exp(2.0, 3.0) - direct).abs() < 1e-14);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 5.0), 5.0);
        // would overflow if done directly
        let big = log_add_exp(800.0, 800.0);
        assert!((big - (800.0 + 2f64.ln())).abs() < 1e-12);
    }
}
