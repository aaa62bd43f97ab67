//! Dispatch from a [`RunSpec`] to the engines.

use std::path::Path;

use nterm_core::{
    bound_samples, certify, class_error_infty, default_m_max, dyadic_grid, extremal_sequence, fit_rate,
    predicted_rate, random_search_oracle, ratio_envelope, sigma_n_sq, structure_oracle, tail_energy_profile,
    BoundsEngine, CoefficientSequence, Error, Exponent, OracleConfig, RateModel, TailPolicy,
    WeightModel,
};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::render::{Artifact, Cell, Tabular};
use crate::spec::{CommandKind, FitModel, NRange, OracleOverrides, RunSpec, SequenceSource};

pub fn run(spec: &RunSpec) -> Result<Artifact, CliError> {
    match spec.command {
        CommandKind::Bounds => bounds(spec),
        CommandKind::Exact => exact(spec),
        CommandKind::Extremal => extremal(spec),
        CommandKind::Oracle => oracle(spec),
        CommandKind::Certify => certify_cmd(spec),
        CommandKind::Ratefit => ratefit(spec),
    }
}

fn model(spec: &RunSpec) -> Result<WeightModel, CliError> {
    spec.weights
        .as_ref()
        .ok_or_else(|| CliError::usage("--weights is required"))?
        .load()
        .map_err(CliError::from_weights)
}

fn exponent(spec: &RunSpec) -> Result<Exponent, CliError> {
    spec.p.ok_or_else(|| CliError::usage("--p is required"))
}

fn grid(spec: &RunSpec) -> Result<Vec<usize>, CliError> {
    spec.n
        .as_ref()
        .map(NRange::values)
        .ok_or_else(|| CliError::usage("--n is required"))
}

fn header(spec: &RunSpec) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("command".into(), spec.command.name().into());
    if let Some(w) = &spec.weights {
        m.insert("weights".into(), w.to_string().into());
    }
    if let Some(p) = &spec.p {
        m.insert("p".into(), serde_json::to_value(p).expect("exponent serializes"));
    }
    m
}

fn finish(mut head: serde_json::Map<String, Value>, body: Value) -> Value {
    if let Value::Object(b) = body {
        head.extend(b);
    }
    Value::Object(head)
}

const BOUNDS_HEADER: [&str; 7] = ["n", "lower_sq", "upper_sq", "status", "argmax_m", "m_scanned", "gap_bound"];

fn bounds(spec: &RunSpec) -> Result<Artifact, CliError> {
    let w = model(spec)?;
    let p = exponent(spec)?;
    let ns = grid(spec)?;
    let mut rows = Vec::with_capacity(ns.len());
    let mut json_rows = Vec::with_capacity(ns.len());
    match p {
        Exponent::Finite(_) => {
            let mut engine = BoundsEngine::new(&w, p)?;
            for n in ns {
                let m_max = spec.m_max.unwrap_or_else(|| default_m_max(n));
                let r = engine.bounds(n, m_max)?;
                rows.push(vec![
                    n.into(),
                    r.lower_sq.into(),
                    r.upper_sq.into(),
                    r.status.label().into(),
                    r.argmax_m.into(),
                    r.m_scanned.into(),
                    r.gap_bound.into(),
                ]);
                let mut v = serde_json::to_value(&r).expect("bounds serialize");
                v["m_max"] = m_max.into();
                json_rows.push(v);
            }
        }
        Exponent::Infinite => {
            if spec.m_max.is_some() {
                return Err(CliError::usage("--m-max does not apply to p = inf"));
            }
            let policy = TailPolicy::default();
            for n in ns {
                let r = class_error_infty(&w, n, &policy)?;
                let label = serde_json::to_value(r.status).expect("status serializes");
                rows.push(vec![
                    n.into(),
                    r.value_sq.into(),
                    r.value_sq.into(),
                    label.as_str().unwrap_or_default().into(),
                    Cell::Empty,
                    r.terms.into(),
                    r.truncation_bound.into(),
                ]);
                json_rows.push(serde_json::to_value(&r).expect("bounds serialize"));
            }
        }
    }
    Ok(Artifact {
        json: finish(header(spec), json!({ "rows": json_rows })),
        tabular: Tabular {
            header: Some(BOUNDS_HEADER.to_vec()),
            rows,
        },
        ok: true,
    })
}

fn read_sequence(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::from(Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(
            line.parse()
                .map_err(|_| CliError::parameter(format!("{}: line {} is not a number", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

fn exact(spec: &RunSpec) -> Result<Artifact, CliError> {
    let entries = match spec.sequence.as_ref().ok_or_else(|| CliError::usage("--x is required"))? {
        SequenceSource::Inline(v) => v.clone(),
        SequenceSource::File(path) => read_sequence(path)?,
    };
    let x = CoefficientSequence::new(entries).map_err(|e| CliError::parameter(e.to_string()))?;
    let support = x.entries().len();
    let ns = match &spec.n {
        Some(r) => r.values(),
        None => (0..=support).collect(),
    };
    let norm = match (&spec.weights, spec.p) {
        (Some(_), Some(p)) => Some(nterm_core::weighted_lp_norm(&x, &model(spec)?, p)?),
        _ => None,
    };
    let profile = tail_energy_profile(&x);
    let mut rows = Vec::with_capacity(ns.len());
    let mut json_rows = Vec::with_capacity(ns.len());
    for n in ns {
        let sq = profile.get(n).copied().unwrap_or(0.0);
        rows.push(vec![n.into(), sq.into(), sq.sqrt().into()]);
        json_rows.push(json!({ "n": n, "sigma_sq": sq, "sigma": sq.sqrt() }));
    }
    let mut body = json!({ "support": support, "rows": json_rows });
    if let Some(v) = norm {
        body["norm"] = v.into();
    }
    Ok(Artifact {
        json: finish(header(spec), body),
        tabular: Tabular {
            header: Some(vec!["n", "sigma_sq", "sigma"]),
            rows,
        },
        ok: true,
    })
}

fn extremal(spec: &RunSpec) -> Result<Artifact, CliError> {
    let w = model(spec)?;
    let p = exponent(spec)?;
    let m = spec.m.ok_or_else(|| CliError::usage("--m is required"))?;
    let s = extremal_sequence(&w, p, m)?;
    let cumulative = 1.0 / s.get(1);
    let entries = s.into_entries();
    let body = json!({ "m": m, "cumulative": cumulative, "entries": entries });
    Ok(Artifact {
        json: finish(header(spec), body),
        tabular: Tabular {
            header: None,
            rows: vec![entries.iter().map(|v| Cell::Float(*v)).collect()],
        },
        ok: true,
    })
}

fn oracle_config(o: &OracleOverrides, n: usize) -> Result<OracleConfig, CliError> {
    let d = OracleConfig::for_n(n);
    let cfg = OracleConfig {
        m_max: o.m_max.unwrap_or(d.m_max),
        grid_points: o.grid_points.unwrap_or(d.grid_points),
        refine_tol: o.refine_tol.unwrap_or(d.refine_tol),
        iters: o.iters.unwrap_or(d.iters),
        seed: o.seed.unwrap_or(d.seed),
        max_support: o.max_support.unwrap_or(d.max_support),
    };
    cfg.validate().map_err(|e| CliError::parameter(e.to_string()))?;
    Ok(cfg)
}

fn oracle(spec: &RunSpec) -> Result<Artifact, CliError> {
    let w = model(spec)?;
    let p = exponent(spec)?;
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    for n in grid(spec)? {
        let cfg = oracle_config(&spec.oracle, n)?;
        let (structure_sq, m, head, last) = match p {
            Exponent::Finite(_) => {
                let s = structure_oracle(&w, p, n, &cfg)?;
                (s.value_sq, Some(s.m), Some(s.head), Some(s.last))
            }
            Exponent::Infinite => {
                // the sup-norm ball is maximised by the inverse weights
                let inv: Vec<f64> = w.values(cfg.m_max + 1)?.into_iter().map(|v| 1.0 / v).collect();
                (sigma_n_sq(&CoefficientSequence::new(inv)?, n), None, None, None)
            }
        };
        let random = random_search_oracle(&w, p, n, &cfg)?;
        rows.push(vec![
            n.into(),
            cfg.m_max.into(),
            structure_sq.into(),
            m.into(),
            head.into(),
            last.into(),
            random.value_sq.into(),
        ]);
        json_rows.push(json!({
            "n": n,
            "m_max": cfg.m_max,
            "seed": cfg.seed,
            "iters": cfg.iters,
            "structure_sq": structure_sq,
            "structure_m": m,
            "structure_head": head,
            "structure_last": last,
            "random_sq": random.value_sq,
            "random_witness": random.witness,
        }));
    }
    Ok(Artifact {
        json: finish(header(spec), json!({ "rows": json_rows })),
        tabular: Tabular {
            header: Some(vec![
                "n",
                "m_max",
                "structure_sq",
                "structure_m",
                "structure_head",
                "structure_last",
                "random_sq",
            ]),
            rows,
        },
        ok: true,
    })
}

fn certify_cmd(spec: &RunSpec) -> Result<Artifact, CliError> {
    let w = model(spec)?;
    let p = exponent(spec)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for n in grid(spec)? {
        let cfg = oracle_config(&spec.oracle, n)?;
        let r = certify(&w, p, n, &cfg)?;
        rows.push(vec![
            n.into(),
            r.status.into(),
            r.lower_sq.into(),
            r.upper_sq.into(),
            r.structure_sq.into(),
            r.random_sq.into(),
            r.pass.into(),
        ]);
        reports.push(r);
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(Artifact {
        json: finish(header(spec), json!({ "pass": pass, "reports": reports })),
        tabular: Tabular {
            header: Some(vec!["n", "status", "lower_sq", "upper_sq", "structure_sq", "random_sq", "pass"]),
            rows,
        },
        ok: pass,
    })
}

fn ratefit(spec: &RunSpec) -> Result<Artifact, CliError> {
    let w = model(spec)?;
    let p = exponent(spec)?;
    let ns = spec.n.as_ref().map_or_else(|| dyadic_grid(6, 16), NRange::values);
    let prediction = match predicted_rate(&w, p) {
        Ok(pr) => Some(pr),
        Err(Error::UnsupportedFamily(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let rate_model = match (spec.model, &prediction) {
        (Some(FitModel::Fixed) | None, Some(pr)) => RateModel::FixedLog { s: pr.log_exponent },
        (Some(FitModel::Fixed), None) => {
            return Err(CliError::parameter("--model fixed needs a built-in weight family"));
        }
        (Some(FitModel::Poly) | None, _) => RateModel::PolyOnly,
        (Some(FitModel::Polylog), _) => RateModel::PolyLog,
    };
    let samples = bound_samples(&w, p, &ns)?;
    let fit = fit_rate(&samples, rate_model)?;
    let envelope = match &prediction {
        Some(pr) if pr.valid => Some(ratio_envelope(&samples, pr)?),
        _ => None,
    };
    let row = vec![
        fit.poly_exponent.into(),
        fit.log_exponent.into(),
        fit.intercept.into(),
        fit.residual_rms.into(),
        prediction.as_ref().map(|p| p.poly_exponent).into(),
        prediction.as_ref().map(|p| p.log_exponent).into(),
        prediction.as_ref().map(|p| p.valid).into(),
        envelope.map(|e| e.c_min).into(),
        envelope.map(|e| e.c_max).into(),
    ];
    let sample_rows: Vec<Value> = samples.iter().map(|(n, s)| json!({ "n": n, "sigma": s })).collect();
    let body = json!({
        "model": rate_model,
        "fit": fit,
        "prediction": prediction,
        "envelope": envelope,
        "samples": sample_rows,
    });
    Ok(Artifact {
        json: finish(header(spec), body),
        tabular: Tabular {
            header: Some(vec![
                "poly_exponent",
                "log_exponent",
                "intercept",
                "residual_rms",
                "predicted_poly_exponent",
                "predicted_log_exponent",
                "prediction_valid",
                "c_min",
                "c_max",
            ]),
            rows: vec![row],
        },
        ok: true,
    })
}
