//! Brute-force maximisation of `sigma_n` over `U(lp(w))`, used to certify
//! the analytic bounds.
//!
//! The structure oracle searches the family `(b, ..., b, c, 0, ...)` (`m`
//! copies of `b`, then `c <= b`) which dominates every nonincreasing element
//! of the unit ball. The random oracle samples nonincreasing sequences
//! directly and only ever produces lower bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{class_error_infty, default_m_max, BoundStatus, BoundsEngine, TailPolicy, TailStatus};
use crate::cumulative::{root, CumulativeWeightTable};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::golden::golden_section_max;
use crate::seqcore::{sigma_n_sq, tail_energy, weighted_norm_with, CoefficientSequence};
use crate::serde_util::finite_or_null;
use crate::weights::WeightModel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleConfig {
    /// Largest head length `m` tried by the structure oracle.
    pub m_max: usize,
    /// Coarse grid size for the inner search over `b`.
    pub grid_points: usize,
    /// Bracket width at which golden-section refinement stops.
    pub refine_tol: f64,
    /// Random sequences drawn by the sampler.
    pub iters: usize,
    pub seed: u64,
    /// Longest support drawn by the sampler.
    pub max_support: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            m_max: 1024,
            grid_points: 512,
            refine_tol: 1e-12,
            iters: 100_000,
            seed: 0,
            max_support: 64,
        }
    }
}

impl OracleConfig {
    /// Defaults with `m_max = max(1024, 64 n)`.
    pub fn for_n(n: usize) -> Self {
        OracleConfig {
            m_max: default_m_max(n),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.refine_tol > 0.0 && self.refine_tol.is_finite()) {
            return Err(Error::domain(format!("refine_tol must be positive, got {}", self.refine_tol)));
        }
        if self.grid_points < 16 {
            return Err(Error::domain(format!("grid_points must be >= 16, got {}", self.grid_points)));
        }
        if self.max_support == 0 {
            return Err(Error::domain("max_support must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureResult {
    pub value_sq: f64,
    pub witness: CoefficientSequence,
    /// Head length of the best `(b, ..., b, c)` candidate.
    pub m: usize,
    pub head: f64,
    pub last: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    value: f64,
    m: usize,
    head: f64,
    last: f64,
}

/// Maximises `(m - n) b^2 + c^2` subject to `b^p W_m^p + c^p w_{m+1}^p <= 1`,
/// `0 <= c <= b`, over `n <= m <= cfg.m_max`.
pub fn structure_oracle(w: &WeightModel, p: Exponent, n: usize, cfg: &OracleConfig) -> Result<StructureResult> {
    let p = p.require_finite("structure_oracle")?;
    cfg.validate()?;
    if cfg.m_max < n + 1 {
        return Err(Error::domain(format!(
            "oracle m_max = {} must be at least n + 1 = {}",
            cfg.m_max,
            n + 1
        )));
    }
    let table = CumulativeWeightTable::build(w, p, cfg.m_max + 1)?;
    Ok(structure_with_table(&table, n, cfg.m_max, cfg))
}

fn structure_with_table(table: &CumulativeWeightTable, n: usize, m_max: usize, cfg: &OracleConfig) -> StructureResult {
    let candidates: Vec<Candidate> = (n..=m_max)
        .into_par_iter()
        .map(|m| best_for_head(table, n, m, cfg))
        .collect();
    // fixed-order merge keeps the result independent of thread scheduling
    let best = candidates
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("m range is nonempty");
    let mut entries = vec![best.head; best.m];
    if best.last > 0.0 || entries.is_empty() {
        entries.push(best.last);
    }
    StructureResult {
        value_sq: best.value,
        witness: CoefficientSequence::from_vec_unchecked(entries),
        m: best.m,
        head: best.head,
        last: best.last,
    }
}

/// Best `(b, c)` for a fixed head length `m`.
///
/// Parametrised by `s = b W_m in [W_m / W_{m+1}, 1]`: below that range
/// `c = b` and the objective `(m - n + 1) b^2` only grows with `b`.
fn best_for_head(table: &CumulativeWeightTable, n: usize, m: usize, cfg: &OracleConfig) -> Candidate {
    let p = table.p();
    if m == 0 {
        // empty head: the single spike c e_1
        let c = 1.0 / table.weight(1);
        return Candidate {
            value: c * c,
            m: 0,
            head: 0.0,
            last: c,
        };
    }
    let inv_wm = table.inv(m);
    let w_next = table.weight(m + 1);
    let s_lo = if table.is_log_domain() {
        ((table.ln_power_sum(m) - table.ln_power_sum(m + 1)) / p).exp()
    } else {
        root(table.power_sum(m) / table.power_sum(m + 1), p)
    };
    let k = (m - n) as f64;
    let eval = |s: f64| -> (f64, f64, f64) {
        let b = s * inv_wm;
        // remaining budget S = 1 - b^p W_m^p for the (m+1)-th entry
        let budget = (1.0 - s.powf(p)).max(0.0);
        let c = if s >= 1.0 { 0.0 } else { (root(budget, p) / w_next).min(b) };
        (k * b * b + c * c, b, c)
    };

    let g = cfg.grid_points;
    let step = (1.0 - s_lo) / (g - 1) as f64;
    let grid_s = |i: usize| if i + 1 == g { 1.0 } else { s_lo + step * i as f64 };
    let mut best_i = 0;
    let mut best = eval(s_lo);
    for i in 1..g {
        let v = eval(grid_s(i));
        if v.0 > best.0 {
            best = v;
            best_i = i;
        }
    }
    let lo = grid_s(best_i.saturating_sub(1));
    let hi = grid_s((best_i + 1).min(g - 1));
    if hi > lo {
        let (s, _) = golden_section_max(|s| eval(s).0, lo, hi, cfg.refine_tol);
        let refined = eval(s);
        if refined.0 > best.0 {
            best = refined;
        }
    }
    Candidate {
        value: best.0,
        m,
        head: best.1,
        last: best.2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomSearchResult {
    pub value_sq: f64,
    pub witness: CoefficientSequence,
}

const SAMPLER_BATCH: usize = 2048;

/// Best `sigma_n^2` over `cfg.iters` random nonincreasing unit-ball sequences.
///
/// Draws are split into fixed batches, each with its own ChaCha stream, so
/// the result is bitwise reproducible for a given `(seed, cfg)` regardless
/// of thread count.
pub fn random_search_oracle(w: &WeightModel, p: Exponent, n: usize, cfg: &OracleConfig) -> Result<RandomSearchResult> {
    cfg.validate()?;
    let support = match w.table_len() {
        Some(l) => cfg.max_support.min(l),
        None => cfg.max_support,
    };
    let weights = w.values(support)?;
    let iters = cfg.iters.max(1);
    let batches = iters.div_ceil(SAMPLER_BATCH);
    let results: Vec<(f64, Vec<f64>)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let count = SAMPLER_BATCH.min(iters - b * SAMPLER_BATCH);
            sample_batch(&weights, p, n, cfg.seed, b as u64, count)
        })
        .collect();
    let (value_sq, entries) = results
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one batch");
    Ok(RandomSearchResult {
        value_sq,
        witness: CoefficientSequence::from_vec_unchecked(entries),
    })
}

fn sample_batch(weights: &[f64], p: Exponent, n: usize, seed: u64, stream: u64, count: usize) -> (f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut x = Vec::with_capacity(weights.len());
    for _ in 0..count {
        let len = rng.random_range(1..=weights.len());
        let mode = rng.random_range(0..3u8);
        let mix: f64 = rng.random();
        x.clear();
        for _ in 0..len {
            let u: f64 = rng.random();
            let e = -(1.0 - rng.random::<f64>()).ln();
            let v = match mode {
                0 => u,
                1 => e,
                _ => mix * u + (1.0 - mix) * e,
            };
            x.push(v);
        }
        x.sort_unstable_by(|a, b| b.total_cmp(a));
        let norm = weighted_norm_with(&x, weights, p);
        if !(norm > 0.0 && norm.is_finite()) {
            continue;
        }
        for v in x.iter_mut() {
            *v /= norm;
        }
        let value = tail_energy(&x, n);
        if value > best.0 {
            best = (value, x.clone());
        }
    }
    if best.1.is_empty() {
        best = (0.0, vec![0.0]);
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
}

/// Cross-check of the analytic bounds against both oracles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub weights: String,
    pub p: Exponent,
    pub n: usize,
    pub m_max: usize,
    pub seed: u64,
    pub iters: usize,
    pub status: &'static str,
    #[serde(serialize_with = "finite_or_null")]
    pub lower_sq: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub upper_sq: f64,
    pub structure_sq: f64,
    pub random_sq: f64,
    pub tol: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Tolerance used by [`certify`].
pub const CERTIFY_TOL: f64 = 1e-9;

/// Runs the bounds engine and both oracles and checks
/// `lower - tol <= structure <= upper + tol` and `random <= structure + tol`.
///
/// Divergent classes are checked in consistency mode: the structure value
/// must sit inside the scanned bounds and grow with `m_max`. Failures are
/// reported through `pass`, not as errors.
pub fn certify(w: &WeightModel, p: Exponent, n: usize, cfg: &OracleConfig) -> Result<CertificationReport> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    if let Some(len) = w.table_len() {
        cfg.m_max = cfg.m_max.min(len.saturating_sub(1));
    }
    if cfg.m_max < n + 1 {
        return Err(Error::domain(format!(
            "m_max = {} must be at least n + 1 = {}",
            cfg.m_max,
            n + 1
        )));
    }
    let tol = CERTIFY_TOL;
    let random = random_search_oracle(w, p, n, &cfg)?;
    let mut checks = Vec::new();
    let (status, lower_sq, upper_sq, structure_sq) = match p {
        Exponent::Finite(pf) => {
            let mut engine = BoundsEngine::new(w, p)?;
            let bounds = engine.bounds(n, cfg.m_max)?;
            // an auto-extended scan may place the maximum past m_max
            if let Some(a) = bounds.argmax_m {
                cfg.m_max = cfg.m_max.max(a);
            }
            let table = CumulativeWeightTable::build(w, pf, cfg.m_max + 1)?;
            let structure = structure_with_table(&table, n, cfg.m_max, &cfg).value_sq;
            if bounds.status.is_finite_classification() {
                checks.push(Check {
                    name: "structure_within_bounds",
                    pass: bounds.scan_lower_sq - tol <= structure && structure <= bounds.upper_sq + tol,
                });
            } else {
                checks.push(Check {
                    name: "structure_within_scanned_bounds",
                    pass: bounds.scan_lower_sq - tol <= structure && structure <= bounds.scan_upper_sq + tol,
                });
                if bounds.status == BoundStatus::Divergent && cfg.m_max / 2 > n {
                    let half = structure_with_table(&table, n, cfg.m_max / 2, &cfg).value_sq;
                    checks.push(Check {
                        name: "structure_grows_with_m_max",
                        pass: structure > half,
                    });
                }
            }
            (bounds.status.label(), bounds.lower_sq, bounds.upper_sq, structure)
        }
        Exponent::Infinite => {
            let policy = TailPolicy::default();
            let exact = class_error_infty(w, n, &policy)?;
            let support = cfg.m_max + 1;
            let inv = CoefficientSequence::from_vec_unchecked(
                w.values(support)?.into_iter().map(|v| 1.0 / v).collect(),
            );
            let structure = sigma_n_sq(&inv, n);
            match exact.status {
                TailStatus::Divergent => {
                    let half_len = cfg.m_max / 2 + 1;
                    if half_len > n {
                        let half = CoefficientSequence::from_vec_unchecked(inv.entries()[..half_len].to_vec());
                        checks.push(Check {
                            name: "partial_sums_grow",
                            pass: structure > sigma_n_sq(&half, n),
                        });
                    }
                }
                _ => {
                    let slack = exact.truncation_bound.unwrap_or(0.0) + tol;
                    let beyond = if exact.status == TailStatus::Converged {
                        let far = class_error_infty(w, support, &policy)?;
                        far.value_sq + far.truncation_bound.unwrap_or(0.0)
                    } else {
                        0.0
                    };
                    checks.push(Check {
                        name: "structure_within_bounds",
                        pass: exact.value_sq - beyond - slack <= structure && structure <= exact.value_sq + slack,
                    });
                }
            }
            let label = match exact.status {
                TailStatus::Converged => "converged",
                TailStatus::Divergent => "divergent",
                TailStatus::Truncated => "truncated",
            };
            (label, exact.value_sq, exact.value_sq, structure)
        }
    };
    checks.push(Check {
        name: "random_below_structure",
        pass: random.value_sq <= structure_sq + tol,
    });
    let pass = checks.iter().all(|c| c.pass);
    Ok(CertificationReport {
        weights: w.to_string(),
        p,
        n,
        m_max: cfg.m_max,
        seed: cfg.seed,
        iters: cfg.iters,
        status,
        lower_sq,
        upper_sq,
        structure_sq,
        random_sq: random.value_sq,
        tol,
        checks,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::class_bounds;
    use crate::seqcore::weighted_lp_norm;

    fn one() -> WeightModel {
        WeightModel::constant()
    }

    /// Exhaustive grid over (m, b, c) for w = 1, p = 1.
    fn exhaustive_const_p1(n: usize, m_max: usize, res: usize) -> f64 {
        let mut best: f64 = 0.0;
        for m in n.max(1)..=m_max {
            for i in 0..=res {
                let b = i as f64 / res as f64 / m as f64;
                let c = (1.0 - b * m as f64).max(0.0).min(b);
                best = best.max((m - n) as f64 * b * b + c * c);
            }
        }
        best
    }

    #[test]
    fn structure_const_p1_n1() {
        let oracle = exhaustive_const_p1(1, 32, 10_000);
        assert!((oracle - 0.25).abs() < 1e-12);
        let cfg = OracleConfig::for_n(1);
        let r = structure_oracle(&one(), Exponent::Finite(1.0), 1, &cfg).unwrap();
        assert!((r.value_sq - 0.25).abs() < 1e-15, "{}", r.value_sq);
        let wit = r.witness.entries();
        assert!((wit[0] - 0.5).abs() < 1e-12 && (wit[1] - 0.5).abs() < 1e-12, "{wit:?}");
        assert!(wit[2..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn structure_const_p2_approaches_one() {
        let cfg = OracleConfig {
            m_max: 10_000,
            ..Default::default()
        };
        let r = structure_oracle(&one(), Exponent::Finite(2.0), 1, &cfg).unwrap();
        assert!(r.value_sq < 1.0);
        assert!(r.value_sq > 1.0 - 1e-3);
    }

    #[test]
    fn structure_single_spike() {
        // n = 0, m_max = 1: the spike w_1^{-1} e_1 is feasible and optimal for w = 1, p = 1
        let cfg = OracleConfig {
            m_max: 1,
            ..Default::default()
        };
        let r = structure_oracle(&one(), Exponent::Finite(1.0), 0, &cfg).unwrap();
        assert_eq!(r.value_sq, 1.0);
        // in general the narrowest family member gives W_{n+1}^{-2}
        for w in [WeightModel::pow_log(1.0, 0.0).unwrap(), WeightModel::log_power(1.0).unwrap()] {
            for n in [0, 1, 5] {
                let cfg = OracleConfig {
                    m_max: n + 1,
                    ..Default::default()
                };
                let r = structure_oracle(&w, Exponent::Finite(1.5), n, &cfg).unwrap();
                let t = CumulativeWeightTable::build(&w, 1.5, n + 1).unwrap();
                assert!(r.value_sq >= t.inv_sq(n + 1) * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn structure_rejects_bad_input() {
        let cfg = OracleConfig {
            m_max: 3,
            ..Default::default()
        };
        assert!(structure_oracle(&one(), Exponent::Finite(1.0), 3, &cfg).is_err());
        assert!(structure_oracle(&one(), Exponent::Infinite, 1, &cfg).is_err());
        let bad = OracleConfig {
            grid_points: 4,
            ..Default::default()
        };
        assert!(structure_oracle(&one(), Exponent::Finite(1.0), 1, &bad).is_err());
        let bad = OracleConfig {
            refine_tol: 0.0,
            ..Default::default()
        };
        assert!(structure_oracle(&one(), Exponent::Finite(1.0), 1, &bad).is_err());
    }

    #[test]
    fn structure_witness_is_valid_and_inside_bounds() {
        let models = [
            one(),
            WeightModel::log_power(1.0).unwrap(),
            WeightModel::pow_log(1.0, 0.0).unwrap(),
            WeightModel::pow_log(0.5, -1.0).unwrap(),
        ];
        for w in &models {
            for p in [0.5, 1.0, 1.5, 2.0, 3.0] {
                for n in [0, 1, 4, 9] {
                    let cfg = OracleConfig {
                        m_max: 400,
                        grid_points: 64,
                        ..Default::default()
                    };
                    let r = structure_oracle(w, Exponent::Finite(p), n, &cfg).unwrap();
                    let norm = weighted_lp_norm(&r.witness, w, Exponent::Finite(p)).unwrap();
                    assert!(norm <= 1.0 + 1e-12, "{w} p={p} n={n} norm={norm}");
                    let direct = sigma_n_sq(&r.witness, n);
                    assert!((direct - r.value_sq).abs() <= 1e-10 * r.value_sq.max(1.0));
                    let b = class_bounds(w, Exponent::Finite(p), n, 400).unwrap();
                    assert!(r.value_sq >= b.scan_lower_sq - 1e-9, "{w} p={p} n={n}");
                    assert!(r.value_sq <= b.scan_upper_sq + 1e-9, "{w} p={p} n={n}");
                }
            }
        }
    }

    #[test]
    fn random_const_p1_n1() {
        let cfg = OracleConfig {
            iters: 100_000,
            seed: 42,
            ..Default::default()
        };
        let r = random_search_oracle(&one(), Exponent::Finite(1.0), 1, &cfg).unwrap();
        assert!((0.24..=0.25).contains(&r.value_sq), "{}", r.value_sq);
    }

    #[test]
    fn random_sigma0_bounded_by_one() {
        for seed in [0, 1, 99] {
            let cfg = OracleConfig {
                iters: 5_000,
                seed,
                ..Default::default()
            };
            let r = random_search_oracle(&one(), Exponent::Finite(2.0), 0, &cfg).unwrap();
            assert!(r.value_sq <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn random_is_reproducible() {
        let cfg = OracleConfig {
            iters: 20_000,
            seed: 7,
            ..Default::default()
        };
        let w = WeightModel::pow_log(0.5, -1.0).unwrap();
        let a = random_search_oracle(&w, Exponent::Finite(0.5), 2, &cfg).unwrap();
        let b = random_search_oracle(&w, Exponent::Finite(0.5), 2, &cfg).unwrap();
        assert_eq!(a.value_sq.to_bits(), b.value_sq.to_bits());
        assert_eq!(a.witness, b.witness);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| random_search_oracle(&w, Exponent::Finite(0.5), 2, &cfg).unwrap());
        assert_eq!(a.value_sq.to_bits(), c.value_sq.to_bits());
    }

    #[test]
    fn random_witness_is_in_the_ball() {
        for p in [Exponent::Finite(0.5), Exponent::Finite(1.0), Exponent::Finite(2.5), Exponent::Infinite] {
            let w = WeightModel::log_power(1.0).unwrap();
            let cfg = OracleConfig {
                iters: 3_000,
                seed: 3,
                ..Default::default()
            };
            let r = random_search_oracle(&w, p, 2, &cfg).unwrap();
            let norm = weighted_lp_norm(&r.witness, &w, p).unwrap();
            assert!(norm <= 1.0 + 1e-12, "p={p} norm={norm}");
            assert_eq!(sigma_n_sq(&r.witness, 2), r.value_sq);
        }
    }

    #[test]
    fn certify_examples() {
        for n in [1, 2, 4, 8] {
            let cfg = OracleConfig {
                iters: 10_000,
                seed: 1,
                ..OracleConfig::for_n(n)
            };
            let r = certify(&one(), Exponent::Finite(1.0), n, &cfg).unwrap();
            assert!(r.pass, "{r:?}");
        }
        let w = WeightModel::pow_log(1.0, 0.0).unwrap();
        for n in 1..=32 {
            let cfg = OracleConfig {
                iters: 2_000,
                seed: 42,
                grid_points: 64,
                ..OracleConfig::for_n(n)
            };
            let r = certify(&w, Exponent::Finite(2.0), n, &cfg).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn certify_divergent_consistency_mode() {
        let cfg = OracleConfig {
            iters: 2_000,
            grid_points: 64,
            ..OracleConfig::for_n(1)
        };
        let r = certify(&one(), Exponent::Finite(3.0), 1, &cfg).unwrap();
        assert_eq!(r.status, "divergent");
        assert!(r.pass, "{r:?}");
        assert!(r.checks.iter().any(|c| c.name == "structure_grows_with_m_max"));
        let small = structure_oracle(&one(), Exponent::Finite(3.0), 1, &OracleConfig { m_max: 100, grid_points: 64, ..Default::default() }).unwrap();
        assert!(r.structure_sq > small.value_sq);
    }

    #[test]
    fn certify_infinite_exponent() {
        let cfg = OracleConfig {
            iters: 2_000,
            ..OracleConfig::for_n(4)
        };
        let w = WeightModel::pow_log(1.0, 0.0).unwrap();
        let r = certify(&w, Exponent::Infinite, 4, &cfg).unwrap();
        assert_eq!(r.status, "converged");
        assert!(r.pass, "{r:?}");
        let r = certify(&one(), Exponent::Infinite, 4, &cfg).unwrap();
        assert_eq!(r.status, "divergent");
        assert!(r.pass, "{r:?}");
        let geo = WeightModel::tabulated((1..=60).map(|j| 2f64.powi(j)).collect()).unwrap();
        let r = certify(&geo, Exponent::Infinite, 2, &cfg).unwrap();
        assert_eq!(r.status, "truncated");
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn certify_report_flags_failure_instead_of_erroring() {
        // a tabulated table too short to confirm anything still produces a report
        let w = WeightModel::tabulated(vec![1.0; 10]).unwrap();
        let cfg = OracleConfig {
            iters: 500,
            ..Default::default()
        };
        let r = certify(&w, Exponent::Finite(2.0), 2, &cfg).unwrap();
        assert_eq!(r.m_max, 9);
        assert_eq!(r.status, "truncated");
        assert!(r.pass);
    }
}
