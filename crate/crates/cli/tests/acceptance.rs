//! Acceptance criteria, one `[PASS]`/`[FAIL]` line each. Exits nonzero if
//! any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use nterm_core::{
    bound_samples, certify, class_bounds, class_error_infty, decreasing_rearrangement, default_m_max, dyadic_grid,
    extremal_sequence, fit_rate, predicted_rate, ratio_envelope, sigma_n_exact, tail_energy_profile,
    weighted_lp_norm, BoundStatus, CoefficientSequence, Exponent, OracleConfig, RateModel, TailPolicy,
    WeightModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sandwich() -> Outcome {
    let start = Instant::now();
    let families = [
        WeightModel::constant(),
        WeightModel::log_power(1.0).unwrap(),
        WeightModel::pow_log(1.0, 0.0).unwrap(),
        WeightModel::pow_log(0.5, -1.0).unwrap(),
    ];
    let mut cases = 0;
    let mut worst_margin = f64::INFINITY;
    let mut below_classified = 0;
    for w in &families {
        for p in [0.5, 1.0, 1.5, 2.0] {
            for n in (0..=8).map(|k| 1usize << k) {
                let cfg = OracleConfig {
                    iters: 100_000,
                    seed: 42,
                    ..OracleConfig::for_n(n)
                };
                let r = certify(w, Exponent::Finite(p), n, &cfg).map_err(|e| e.to_string())?;
                ensure(r.pass, || format!("{w} p={p} n={n}: {r:?}"))?;
                ensure(r.lower_sq.is_finite() && r.upper_sq.is_finite(), || {
                    format!("{w} p={p} n={n}: not a finite classification ({})", r.status)
                })?;
                worst_margin = worst_margin.min(r.upper_sq - r.structure_sq).min(r.structure_sq - r.random_sq);
                if r.structure_sq < r.lower_sq - 1e-9 {
                    below_classified += 1;
                }
                cases += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1}s, target is 120s"))?;
    Ok(format!(
        "{cases} cases, min margin {worst_margin:.3e}, {below_classified} unattained limits compared on the scanned range"
    ))
}

fn fitted(w: &WeightModel, p: Exponent, model: RateModel) -> Result<(f64, f64), String> {
    let samples = bound_samples(w, p, &dyadic_grid(6, 16)).map_err(|e| e.to_string())?;
    let fit = fit_rate(&samples, model).map_err(|e| e.to_string())?;
    let pred = predicted_rate(w, p).map_err(|e| e.to_string())?;
    let env = ratio_envelope(&samples, &pred).map_err(|e| e.to_string())?;
    Ok((fit.poly_exponent, env.spread()))
}

fn stechkin() -> Outcome {
    let (r, spread) = fitted(&WeightModel::constant(), Exponent::Finite(1.0), RateModel::PolyOnly)?;
    ensure((r - 0.5).abs() <= 0.05, || format!("r = {r}"))?;
    ensure(spread <= 4.0, || format!("c_max/c_min = {spread}"))?;
    Ok(format!("r = {r:.4}, c_max/c_min = {spread:.4}"))
}

fn log_power() -> Outcome {
    let w = WeightModel::log_power(1.0).unwrap();
    let (r, spread) = fitted(&w, Exponent::Finite(1.0), RateModel::FixedLog { s: 1.0 })?;
    ensure((r - 0.5).abs() <= 0.05, || format!("r = {r}"))?;
    ensure(spread <= 8.0, || format!("c_max/c_min = {spread}"))?;
    Ok(format!("r = {r:.4}, c_max/c_min = {spread:.4}"))
}

fn pow_log() -> Outcome {
    let a = WeightModel::pow_log(1.0, 0.0).unwrap();
    let (r1, _) = fitted(&a, Exponent::Finite(2.0), RateModel::PolyOnly)?;
    ensure((r1 - 1.0).abs() <= 0.05, || format!("(1,0,2): r = {r1}"))?;
    let b = WeightModel::pow_log(0.5, 1.0).unwrap();
    let (r2, _) = fitted(&b, Exponent::Finite(1.0), RateModel::FixedLog { s: 1.0 })?;
    ensure((r2 - 1.0).abs() <= 0.05, || format!("(0.5,1,1): r = {r2}"))?;
    Ok(format!("(1,0,2): r = {r1:.4}; (0.5,1,1): r = {r2:.4}"))
}

fn sup_norm() -> Outcome {
    let geo = WeightModel::tabulated((1..=60).map(|j| 2f64.powi(j)).collect()).unwrap();
    let v = class_error_infty(&geo, 2, &TailPolicy::default()).map_err(|e| e.to_string())?;
    ensure((v.value_sq - 1.0 / 48.0).abs() <= 1e-12, || format!("value_sq = {}", v.value_sq))?;
    let w = WeightModel::pow_log(1.0, 0.0).unwrap();
    let samples = bound_samples(&w, Exponent::Infinite, &dyadic_grid(6, 16)).map_err(|e| e.to_string())?;
    let r = fit_rate(&samples, RateModel::PolyOnly).map_err(|e| e.to_string())?.poly_exponent;
    ensure((r - 0.5).abs() <= 0.05, || format!("r = {r}"))?;
    Ok(format!("1/48 error {:.1e}, r = {r:.4}", (v.value_sq - 1.0 / 48.0).abs()))
}

fn rearrangement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let ps = [Exponent::Finite(0.5), Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinite];
    let cases = 10_000;
    for case in 0..cases {
        let len = rng.random_range(1..=48usize);
        let x: Vec<f64> = (0..len)
            .map(|_| match rng.random_range(0..4u8) {
                0 => 0.0,
                1 => rng.random_range(-3..=3) as f64,
                _ => rng.random_range(-10.0..10.0),
            })
            .collect();
        let mut acc = 1.0 + rng.random::<f64>();
        let weights: Vec<f64> = (0..len)
            .map(|_| {
                let v = acc;
                if rng.random_bool(0.7) {
                    acc += rng.random::<f64>() * 3.0;
                }
                v
            })
            .collect();
        let w = WeightModel::tabulated(weights).map_err(|e| e.to_string())?;
        let x = CoefficientSequence::new(x).map_err(|e| e.to_string())?;
        let star = decreasing_rearrangement(&x).to_sequence();
        for p in ps {
            let a = weighted_lp_norm(&star, &w, p).map_err(|e| e.to_string())?;
            let b = weighted_lp_norm(&x, &w, p).map_err(|e| e.to_string())?;
            ensure(a <= b * (1.0 + 1e-12), || format!("case {case} p={p}: {a} > {b}"))?;
        }
        for n in 0..=len {
            let (s, t) = (sigma_n_exact(&x, n), sigma_n_exact(&star, n));
            ensure(s.to_bits() == t.to_bits(), || format!("case {case} n={n}: {s} != {t}"))?;
        }
    }
    Ok(format!("{cases} sequences x 4 exponents"))
}

fn divergence() -> Outcome {
    let w = WeightModel::constant();
    for p in [2.5, 3.0] {
        for n in [1, 8, 64] {
            let r = class_bounds(&w, Exponent::Finite(p), n, default_m_max(n)).map_err(|e| e.to_string())?;
            ensure(r.status == BoundStatus::Divergent, || format!("p={p} n={n}: {:?}", r.status))?;
        }
    }
    let mut worst: f64 = 0.0;
    for n in [1, 8, 64] {
        let r = class_bounds(&w, Exponent::Finite(2.0), n, default_m_max(n)).map_err(|e| e.to_string())?;
        let BoundStatus::LimitAtInfinity { estimate } = r.status else {
            return Err(format!("p=2 n={n}: {:?}", r.status));
        };
        for v in [estimate, r.lower_sq, r.upper_sq] {
            ensure((v - 1.0).abs() <= 1e-6, || format!("p=2 n={n}: limit {v}"))?;
            worst = worst.max((v - 1.0).abs());
        }
    }
    Ok(format!("p in {{2.5, 3}} divergent; p = 2 limit within {worst:.1e} of 1"))
}

fn extremal_identity() -> Outcome {
    const M: usize = 4096;
    let families = [
        WeightModel::constant(),
        WeightModel::log_power(0.5).unwrap(),
        WeightModel::log_power(1.0).unwrap(),
        WeightModel::log_power(2.0).unwrap(),
        WeightModel::pow_log(1.0, 0.0).unwrap(),
        WeightModel::pow_log(0.5, 1.0).unwrap(),
        WeightModel::pow_log(0.5, -1.0).unwrap(),
        WeightModel::pow_log(1.0, -1.0).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    let mut checked = 0u64;
    for w in &families {
        let weights = w.values(M).unwrap();
        for p in [0.5, 1.0, 1.5, 2.0, 3.0] {
            // W_m^p by a plain running sum, independent of the cumulative table
            let mut power_sum = 0.0;
            for m in 1..=M {
                power_sum += weights[m - 1].powf(p);
                let wm_sq = power_sum.powf(2.0 / p);
                let s = extremal_sequence(w, Exponent::Finite(p), m).map_err(|e| e.to_string())?;
                let profile = tail_energy_profile(&s);
                for (n, got) in profile.iter().enumerate().take(m) {
                    let expect = (m - n) as f64 / wm_sq;
                    let rel = (got - expect).abs() / expect;
                    ensure(rel <= 1e-10, || format!("{w} p={p} m={m} n={n}: rel err {rel:.2e}"))?;
                    worst = worst.max(rel);
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} (m, n) pairs, max rel err {worst:.2e}"))
}

fn determinism() -> Outcome {
    let args = [
        "certify",
        "--weights",
        "powlog:alpha=1,beta=0",
        "--p",
        "2",
        "--n",
        "1,8,32",
        "--seed",
        "42",
        "--format",
        "json",
    ];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_nterm"))
            .args(args)
            .env("NTERM_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())
    };
    let outputs = [run("4")?, run("4")?, run("1")?];
    for o in &outputs {
        ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())?;
    }
    ensure(outputs[0].stdout == outputs[1].stdout, || "repeated runs differ".into())?;
    ensure(outputs[0].stdout == outputs[2].stdout, || "thread count changes the report".into())?;
    Ok(format!("3 runs, {} identical bytes", outputs[0].stdout.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("sandwich bounds hold against both oracles", sandwich),
        ("unweighted p = 1 decays like n^-1/2", stechkin),
        ("logarithmic weights, beta = 1, p = 1", log_power),
        ("power-log weights", pow_log),
        ("sup-norm branch", sup_norm),
        ("rearrangement lemma", rearrangement),
        ("divergence and limit detection", divergence),
        ("extremal sequence identity", extremal_identity),
        ("certify is deterministic", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {}. {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {}. {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
