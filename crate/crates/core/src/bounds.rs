//! Worst-case n-term errors over the unit ball `U(lp(w))`.
//!
//! For `0 < p < inf` the squared error is sandwiched by
//!
//! ```text
//! sup_{m >= n} (m - n) W_m^{-2}  <=  sigma_n^2  <=  sup_{m >= n} (m - n + 1) W_m^{-2},
//! ```
//!
//! and for `p = inf` it equals `sum_{j > n} w_j^{-2}` exactly. Squared errors
//! are used throughout; take square roots only for presentation.
//!
//! The supremum over `m` need not be attained. A scan up to `m_max` is
//! therefore classified as [`BoundStatus::AttainedAt`], a bounded increasing
//! [`BoundStatus::LimitAtInfinity`], [`BoundStatus::Divergent`] or
//! [`BoundStatus::TruncatedUnknown`].

use serde::Serialize;

pub use crate::cumulative::CumulativeWeightTable;
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::quadrature::exp_sinh;
use crate::serde_util::finite_or_null;
use crate::summation::NeumaierSum;
use crate::weights::WeightModel;

/// Shortest scan on which the tabulated heuristics classify a trend.
const MIN_HEURISTIC_SCAN: usize = 16;

/// Default scan limit: `max(1024, 64 n)`.
pub fn default_m_max(n: usize) -> usize {
    1024usize.max(n.saturating_mul(64))
}

/// Hard cap on automatic scan extension.
const EXTENSION_CAP: usize = 1 << 23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundStatus {
    /// The supremum is a maximum, attained at `m`.
    AttainedAt { m: usize },
    /// `t_m` increases to a finite limit; `estimate` is its extrapolation.
    LimitAtInfinity { estimate: f64 },
    /// `sigma_n(U(lp(w))) = inf`.
    Divergent,
    /// The scan could not classify the supremum.
    TruncatedUnknown,
}

impl BoundStatus {
    pub fn label(&self) -> &'static str {
        match self {
            BoundStatus::AttainedAt { .. } => "attained",
            BoundStatus::LimitAtInfinity { .. } => "limit",
            BoundStatus::Divergent => "divergent",
            BoundStatus::TruncatedUnknown => "truncated",
        }
    }

    pub fn is_finite_classification(&self) -> bool {
        matches!(self, BoundStatus::AttainedAt { .. } | BoundStatus::LimitAtInfinity { .. })
    }
}

/// Bounds on `sigma_n(U(lp(w)))^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    pub n: usize,
    /// `sup_{m >= n} (m - n) W_m^{-2}` as classified (`inf` when divergent).
    #[serde(serialize_with = "finite_or_null")]
    pub lower_sq: f64,
    /// `sup_{m >= n} (m - n + 1) W_m^{-2}` as classified (`inf` when divergent).
    #[serde(serialize_with = "finite_or_null")]
    pub upper_sq: f64,
    /// Largest `(m - n) W_m^{-2}` over the scanned range.
    pub scan_lower_sq: f64,
    /// Largest `(m - n + 1) W_m^{-2}` over the scanned range.
    pub scan_upper_sq: f64,
    /// Index of the scanned maximum of the upper sequence.
    pub argmax_m: Option<usize>,
    pub status: BoundStatus,
    pub m_scanned: usize,
    /// `W_max(n,1)^{-2}`, the guaranteed bound on `upper_sq - lower_sq`.
    pub gap_bound: f64,
    /// Least-squares slope of `ln t_m` against `ln m` over the last scanned decade.
    pub trailing_slope: f64,
}

/// `upper_sq - lower_sq`, at most `W_n^{-2}`.
pub fn sandwich_width(r: &BoundResult) -> Result<f64> {
    if r.lower_sq.is_finite() && r.upper_sq.is_finite() {
        Ok(r.upper_sq - r.lower_sq)
    } else {
        Err(Error::NotApplicable(format!(
            "bounds for n = {} are not finite ({})",
            r.n,
            r.status.label()
        )))
    }
}

/// Scan settings for [`BoundsEngine`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSettings {
    /// Divergence threshold on the trailing log-log slope.
    pub slope_eps: f64,
    /// Extend the scan for closed-form families whose maximum is not yet confirmed.
    pub auto_extend: bool,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            slope_eps: 0.01,
            auto_extend: true,
        }
    }
}

/// Asymptotic behaviour of `t_m = m / W_m^2` for closed-form weights.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Asymptotic {
    Decays,
    Bounded,
    Diverges,
}

/// With `w_j ~ j^alpha (log j)^beta`, `W_m ~ m^{alpha + 1/p} (log m)^beta`
/// and `t_m ~ m^{1 - 2(alpha + 1/p)} (log m)^{-2 beta}`.
fn classify_growth(alpha: f64, beta: f64, p: f64) -> Asymptotic {
    let e = 1.0 - 2.0 * (alpha + 1.0 / p);
    if e.abs() <= 1e-12 {
        if beta > 0.0 {
            Asymptotic::Decays
        } else if beta < 0.0 {
            Asymptotic::Diverges
        } else {
            Asymptotic::Bounded
        }
    } else if e > 0.0 {
        Asymptotic::Diverges
    } else {
        Asymptotic::Decays
    }
}

/// Reusable bound computation for one `(w, p)`; keeps the `W_m` table
/// between calls with different `n`.
#[derive(Debug, Clone)]
pub struct BoundsEngine {
    w: WeightModel,
    p: f64,
    table: CumulativeWeightTable,
    settings: ScanSettings,
}

impl BoundsEngine {
    pub fn new(w: &WeightModel, p: Exponent) -> Result<Self> {
        Self::with_settings(w, p, ScanSettings::default())
    }

    pub fn with_settings(w: &WeightModel, p: Exponent, settings: ScanSettings) -> Result<Self> {
        let p = p.require_finite("class_bounds")?;
        let initial = w.table_len().map_or(1024, |l| l.min(1024));
        let table = CumulativeWeightTable::build(w, p, initial)?;
        Ok(BoundsEngine {
            w: w.clone(),
            p,
            table,
            settings,
        })
    }

    pub fn table(&self) -> &CumulativeWeightTable {
        &self.table
    }

    /// Grows the table to at least `len` entries (capped by tabulated length).
    /// Returns the usable length.
    fn ensure(&mut self, len: usize) -> Result<usize> {
        let target = match self.w.table_len() {
            Some(avail) => len.min(avail),
            None => len,
        };
        if target > self.table.len() {
            let grown = match self.w.table_len() {
                Some(avail) => target.max(self.table.len() * 2).min(avail),
                None => target.max(self.table.len() * 2),
            };
            self.table = CumulativeWeightTable::build(&self.w, self.p, grown)?;
        }
        Ok(target)
    }

    /// Bounds on `sigma_n^2` scanning `max(n,1) <= m <= m_max`.
    pub fn bounds(&mut self, n: usize, m_max: usize) -> Result<BoundResult> {
        if m_max < n + 1 {
            return Err(Error::domain(format!("m_max = {m_max} must be at least n + 1 = {}", n + 1)));
        }
        let growth = self.w.growth().map(|(a, b)| classify_growth(a, b, self.p));
        let mut m_hi = self.ensure(m_max)?;
        let exhausted = m_hi < m_max;
        loop {
            let scan = scan(&self.table, n, m_hi);
            let window = 64usize.max(scan.argmax / 4);
            let confirmed = m_hi >= scan.last_argmax + window;
            let status = match growth {
                Some(Asymptotic::Diverges) => BoundStatus::Divergent,
                Some(Asymptotic::Decays) | Some(Asymptotic::Bounded) if confirmed => {
                    BoundStatus::AttainedAt { m: scan.argmax }
                }
                Some(Asymptotic::Bounded) => BoundStatus::LimitAtInfinity {
                    estimate: extrapolate(&self.table, n, m_hi, 1),
                },
                Some(Asymptotic::Decays) => {
                    let next = m_hi.saturating_mul(2);
                    if self.settings.auto_extend && next <= EXTENSION_CAP {
                        m_hi = self.ensure(next)?;
                        continue;
                    }
                    BoundStatus::TruncatedUnknown
                }
                None => {
                    let informative = !exhausted && m_hi >= MIN_HEURISTIC_SCAN;
                    if informative && scan.trailing_slope >= self.settings.slope_eps {
                        BoundStatus::Divergent
                    } else if confirmed {
                        BoundStatus::AttainedAt { m: scan.argmax }
                    } else if informative {
                        BoundStatus::LimitAtInfinity {
                            estimate: extrapolate(&self.table, n, m_hi, 1),
                        }
                    } else {
                        BoundStatus::TruncatedUnknown
                    }
                }
            };
            return Ok(self.finish(n, m_hi, scan, status));
        }
    }

    fn finish(&self, n: usize, m_hi: usize, scan: Scan, status: BoundStatus) -> BoundResult {
        let gap_bound = self.table.inv_sq(n.max(1));
        let (lower_sq, upper_sq, argmax_m) = match status {
            BoundStatus::AttainedAt { .. } => (scan.max_low, scan.max_up, Some(scan.argmax)),
            BoundStatus::LimitAtInfinity { estimate } => {
                let low = extrapolate(&self.table, n, m_hi, 0);
                let up = estimate.max(scan.max_up);
                (low.max(scan.max_low).min(up), up, None)
            }
            BoundStatus::Divergent => (f64::INFINITY, f64::INFINITY, None),
            BoundStatus::TruncatedUnknown => (scan.max_low, scan.max_up, Some(scan.argmax)),
        };
        BoundResult {
            n,
            lower_sq,
            upper_sq,
            scan_lower_sq: scan.max_low,
            scan_upper_sq: scan.max_up,
            argmax_m,
            status,
            m_scanned: m_hi,
            gap_bound,
            trailing_slope: scan.trailing_slope,
        }
    }
}

/// Bounds on `sigma_n(U(lp(w)))^2` for `0 < p < inf`, scanning up to `m_max`
/// (see [`default_m_max`]).
pub fn class_bounds(w: &WeightModel, p: Exponent, n: usize, m_max: usize) -> Result<BoundResult> {
    BoundsEngine::new(w, p)?.bounds(n, m_max)
}

#[derive(Debug, Clone, Copy)]
struct Scan {
    max_up: f64,
    max_low: f64,
    argmax: usize,
    last_argmax: usize,
    trailing_slope: f64,
}

#[inline]
fn t_at(table: &CumulativeWeightTable, n: usize, m: usize, extra: usize) -> f64 {
    (m - n + extra) as f64 * table.inv_sq(m)
}

fn scan(table: &CumulativeWeightTable, n: usize, m_hi: usize) -> Scan {
    let m_lo = n.max(1);
    let mut max_up = f64::NEG_INFINITY;
    let mut max_low = f64::NEG_INFINITY;
    let mut argmax = m_lo;
    let mut last_argmax = m_lo;
    for m in m_lo..=m_hi {
        let inv = table.inv_sq(m);
        let up = (m - n + 1) as f64 * inv;
        let low = (m - n) as f64 * inv;
        if up > max_up {
            max_up = up;
            argmax = m;
            last_argmax = m;
        } else if up == max_up {
            last_argmax = m;
        }
        if low > max_low {
            max_low = low;
        }
    }
    Scan {
        max_up,
        max_low,
        argmax,
        last_argmax,
        trailing_slope: trailing_slope(table, n, m_lo, m_hi),
    }
}

/// Slope of `ln t_m` vs `ln m` on `[m_hi / 10, m_hi]`, sampled geometrically.
fn trailing_slope(table: &CumulativeWeightTable, n: usize, m_lo: usize, m_hi: usize) -> f64 {
    let start = (m_hi / 10).max(m_lo);
    if m_hi <= start + 1 {
        return 0.0;
    }
    let count = 128usize.min(m_hi - start + 1);
    let ratio = (m_hi as f64 / start as f64).ln();
    let mut xs = Vec::with_capacity(count);
    let mut ys = Vec::with_capacity(count);
    let mut prev = 0usize;
    for k in 0..count {
        let m = ((start as f64) * (ratio * k as f64 / (count - 1) as f64).exp()).round() as usize;
        let m = m.clamp(start, m_hi);
        if m == prev {
            continue;
        }
        prev = m;
        xs.push((m as f64).ln());
        ys.push(t_at(table, n, m, 1).ln());
    }
    least_squares_slope(&xs, &ys)
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Two-level Richardson extrapolation of `t_m = (m - n + extra) W_m^{-2}`
/// along `m_hi/4, m_hi/2, m_hi`, assuming an expansion in powers of `1/m`.
fn extrapolate(table: &CumulativeWeightTable, n: usize, m_hi: usize, extra: usize) -> f64 {
    let top = m_hi - m_hi % 4;
    let t0 = t_at(table, n, top / 4, extra);
    let t1 = t_at(table, n, top / 2, extra);
    let t2 = t_at(table, n, top, extra);
    let r1a = 2.0 * t1 - t0;
    let r1b = 2.0 * t2 - t1;
    (4.0 * r1b - r1a) / 3.0
}

/// How far to push the `p = inf` tail series.
#[derive(Debug, Clone, PartialEq)]
pub struct TailPolicy {
    /// Target absolute error of the reported value.
    pub abs_tol: f64,
    /// Most terms summed directly.
    pub max_terms: usize,
    /// Divergence threshold for tabulated weights (log-log slope of partial sums).
    pub slope_eps: f64,
}

impl Default for TailPolicy {
    fn default() -> Self {
        TailPolicy {
            abs_tol: 1e-15,
            max_terms: 1 << 24,
            slope_eps: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailStatus {
    /// Series summed with a known remainder bound.
    Converged,
    /// `sum w_j^{-2}` diverges.
    Divergent,
    /// Tabulated weights ran out; the remainder past the table is unknown.
    Truncated,
}

/// `sigma_n(U(l_inf(w)))^2 = sum_{j > n} w_j^{-2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfinityBound {
    pub n: usize,
    #[serde(serialize_with = "finite_or_null")]
    pub value_sq: f64,
    /// Absolute error bound on `value_sq`; `None` when the remainder is unknown.
    pub truncation_bound: Option<f64>,
    pub status: TailStatus,
    /// Number of series terms summed explicitly.
    pub terms: usize,
}

/// The exact `p = inf` branch. The extremal element is `w^{-1} = (1/w_1, 1/w_2, ...)`.
///
/// Closed-form families bound the remainder by integral comparison; tabulated
/// families sum to the end of the table and report the remainder as unknown.
pub fn class_error_infty(w: &WeightModel, n: usize, policy: &TailPolicy) -> Result<InfinityBound> {
    if let Some(len) = w.table_len() {
        return Ok(tabulated_tail(w, n, len, policy));
    }
    let divergent = InfinityBound {
        n,
        value_sq: f64::INFINITY,
        truncation_bound: None,
        status: TailStatus::Divergent,
        terms: 0,
    };
    let Some((alpha, beta)) = w.pow_log_params() else {
        // Constant and LogPower weights grow slower than any power of j.
        return Ok(divergent);
    };
    let converges = 2.0 * alpha > 1.0 || (2.0 * alpha == 1.0 && 2.0 * beta > 1.0);
    if !converges {
        return Ok(divergent);
    }
    pow_log_tail(w, alpha, beta, n, policy)
}

fn tabulated_tail(w: &WeightModel, n: usize, len: usize, policy: &TailPolicy) -> InfinityBound {
    // divergence is a property of the whole series: fit the growth of the
    // full partial sums over the last decade of the table
    let start = (len / 10).max(1);
    let stride = ((len - start) / 128).max(1);
    let mut full = NeumaierSum::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut next_sample = start;
    for j in 1..=len {
        let v = w.value_at(j);
        full += 1.0 / (v * v);
        if j == next_sample {
            next_sample += stride;
            xs.push((j as f64).ln());
            ys.push(full.value().ln());
        }
    }
    let status = if xs.len() >= 8 && least_squares_slope(&xs, &ys) >= policy.slope_eps {
        TailStatus::Divergent
    } else {
        TailStatus::Truncated
    };
    // smallest terms first
    let tail: NeumaierSum = ((n + 1)..=len)
        .rev()
        .map(|j| {
            let v = w.value_at(j);
            1.0 / (v * v)
        })
        .collect();
    InfinityBound {
        n,
        value_sq: if status == TailStatus::Divergent {
            f64::INFINITY
        } else {
            tail.value()
        },
        truncation_bound: None,
        status,
        terms: len.saturating_sub(n),
    }
}

/// `int_a^inf x^{-2 alpha} log2(x + 1)^{-2 beta} dx` with an error estimate.
fn tail_integral(alpha: f64, beta: f64, a: f64) -> (f64, f64) {
    if beta == 0.0 {
        return (a.powf(1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0), 0.0);
    }
    let f = |x: f64| x.powf(-2.0 * alpha) * (x + 1.0).log2().powf(-2.0 * beta);
    let (v, e) = exp_sinh(|tau| f(a * (1.0 + tau)));
    (a * v, a * e)
}

fn pow_log_tail(
    w: &WeightModel,
    alpha: f64,
    beta: f64,
    n: usize,
    policy: &TailPolicy,
) -> Result<InfinityBound> {
    let monotone = w
        .pow_log_monotone_start()
        .ok_or_else(|| Error::domain("powlog weights never become increasing"))?;
    // f(x) = phi(x)^{-2} is convex once a ln(x+1)^2 / (ln(x+1) + 1) >= |b| with a = 2 alpha, b = 2 beta
    let mut convex = 1usize;
    if beta < 0.0 {
        let (a, b) = (2.0 * alpha, -2.0 * beta);
        while {
            let l = ((convex + 1) as f64).ln();
            a * l * l / (l + 1.0) < b
        } {
            convex *= 2;
        }
    }
    let f = |x: f64| x.powf(-2.0 * alpha) * (x + 1.0).log2().powf(-2.0 * beta);

    // For f decreasing and convex on [N, inf):
    //   I(N) - f(N)/2  <=  sum_{j > N} f(j)  <=  I(N + 1/2).
    let bracket = |cut: usize| {
        let c = cut as f64;
        let (lo_int, e1) = tail_integral(alpha, beta, c);
        let (hi_int, e2) = tail_integral(alpha, beta, c + 0.5);
        let lo = lo_int - 0.5 * f(c);
        (lo, hi_int, e1 + e2)
    };
    let mut cut = monotone.max(convex).max(n).max(16);
    let (mut lo, mut hi, mut qerr) = bracket(cut);
    while 0.5 * (hi - lo) + qerr > policy.abs_tol && cut.saturating_sub(n) < policy.max_terms {
        cut = (cut * 2).min(n + policy.max_terms);
        (lo, hi, qerr) = bracket(cut);
    }
    let mut acc = NeumaierSum::new();
    // smallest terms first
    for j in ((n + 1)..=cut).rev() {
        let v = w.value_at(j);
        acc += 1.0 / (v * v);
    }
    let head = acc.value();
    let remainder = 0.5 * (lo + hi);
    let value = head + remainder;
    let bound = 0.5 * (hi - lo).abs() + qerr + 4.0 * f64::EPSILON * value;
    Ok(InfinityBound {
        n,
        value_sq: value,
        truncation_bound: Some(bound),
        status: TailStatus::Converged,
        terms: cut.saturating_sub(n),
    })
}
