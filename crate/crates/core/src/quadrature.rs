//! Exp-sinh quadrature for integrals over `[0, inf)`.

use std::f64::consts::FRAC_PI_2;

const U_MAX: f64 = 6.0;
const MAX_LEVELS: usize = 10;

/// `int_0^inf g(t) dt` for `g` finite on `(0, inf)` and decaying faster than `1/t`.
///
/// Returns the estimate and the difference between the last two refinement
/// levels, used as an error estimate.
pub(crate) fn exp_sinh<F: Fn(f64) -> f64>(g: F) -> (f64, f64) {
    let term = |u: f64| {
        let s = FRAC_PI_2 * u.sinh();
        let t = s.exp();
        if t == 0.0 || !t.is_finite() {
            return 0.0;
        }
        let v = g(t) * FRAC_PI_2 * u.cosh() * t;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };

    let mut h = 0.5;
    let steps = (U_MAX / h) as i64;
    let mut sum = term(0.0);
    for k in 1..=steps {
        let u = k as f64 * h;
        sum += term(u) + term(-u);
    }
    let mut estimate = sum * h;
    let mut err = f64::INFINITY;
    for _ in 0..MAX_LEVELS {
        h *= 0.5;
        let steps = (U_MAX / h) as i64;
        let mut k = 1;
        while k <= steps {
            let u = k as f64 * h;
            sum += term(u) + term(-u);
            k += 2;
        }
        let next = sum * h;
        err = (next - estimate).abs();
        estimate = next;
        if err <= 1e-15 * estimate.abs() {
            break;
        }
    }
    (estimate, err)
}
