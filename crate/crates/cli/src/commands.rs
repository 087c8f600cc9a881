//! The five experiment commands. Each returns a report, CSV tables and a
//! short human summary.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radpoisson_core::criterion::{
    corollary_threshold, evaluate_series, model_threshold, term_thm1, term_thm2, Variant, Verdict,
};
use radpoisson_core::geometry::OmegaTable;
use radpoisson_core::green::{GreenKernel, WeightKind};
use radpoisson_core::solver::{potential_at_origin, residual_profile, sharpness_scan, solve_radial, Normalization};
use radpoisson_core::verify::{run_suite, Check, Relation};
use radpoisson_core::Error as CoreError;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Family, VerifyConfig, WeightChoice};
use crate::error::CliError;
use crate::report::{csv, Cell, Report, Skipped};

pub const FLUX_TOL: f64 = 1e-8;
pub const LOG_LEVEL_TOL: f64 = 1e-6;
pub const POTENTIAL_TOL: f64 = 1e-6;
pub const GRADIENT_RATIO_CAP: f64 = 16.0;

pub struct Outcome {
    pub report: Report,
    pub tables: Vec<(String, String)>,
    pub summary: Vec<String>,
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn config_error(path: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.to_string(),
    }
}

/// Sharp decay threshold of the configured family, when one is known.
pub fn family_threshold(cfg: &ExperimentConfig) -> Option<f64> {
    let m = &cfg.manifold;
    match m.family {
        Family::Euclidean | Family::LinearTail => Some(model_threshold(-3.0)),
        Family::Hyperbolic => Some(model_threshold(0.0)),
        Family::PowerLaw => Some(model_threshold(-2.0)),
        Family::PowerExp => m.params.get("gamma").and_then(Value::as_f64).map(model_threshold),
        Family::Tabulated => None,
    }
}

fn family_label(cfg: &ExperimentConfig) -> String {
    let v = serde_json::to_value(cfg.manifold.family).expect("family serialises");
    format!("{} n={}", v.as_str().unwrap_or("?"), cfg.manifold.dim)
}

pub fn analyze(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let a = cfg.analyze.clone().unwrap_or_default();
    let m = cfg.build_manifold()?;
    let r_max = cfg.numerics.r_max.unwrap_or(100.0).max(4.0);
    let kernel = GreenKernel::build(&m)?;
    let parabolic = kernel.is_parabolic();
    let kernel = Arc::new(kernel);
    let table = OmegaTable::new(&m, r_max, &cfg.quadrature())?;
    let cartan_hadamard = match m.check_cartan_hadamard(r_max) {
        Ok(()) => json!({"holds": true}),
        Err(CoreError::NotCartanHadamard(r)) => json!({"holds": false, "violation_at": r}),
        Err(e) => return Err(e.into()),
    };

    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    let weight = if parabolic && cfg.weight.kind == WeightChoice::Green {
        skipped.push(Skipped {
            name: "green".into(),
            reason: "manifold is parabolic: no minimal positive Green's function, so the Green weight, identities and estimates are undefined".into(),
        });
        None
    } else {
        Some(cfg.build_weight(&m, (!parabolic).then_some(&kernel))?)
    };

    let green_at = |r: f64| if parabolic { Ok(None) } else { kernel.green(r).map(Some) };
    let rho_at = |r: f64| match &weight {
        Some(w) if r >= w.valid_from() => w.eval(r).map(Some),
        _ => Ok(None),
    };
    let mut probes = Vec::new();
    for &r in &a.probe_radii {
        let omega = if r >= table.base_a() && r <= r_max { Some(table.omega(r)?) } else { None };
        let grad = if parabolic { None } else { Some(kernel.gradient_bound_ratio(r)?) };
        probes.push(json!({
            "r": r,
            "omega": omega,
            "rho": rho_at(r)?,
            "green": green_at(r)?,
            "gradient_ratio": grad,
            "ricci_radial": m.ricci_radial(r)?,
        }));
    }

    let mut green_results = Value::Null;
    if !parabolic {
        let mut flux_err: f64 = 0.0;
        for r in log_spaced(0.5, 5.0, 16) {
            flux_err = flux_err.max((kernel.flux_identity_check(kernel.green(r)?)? - 1.0).abs());
        }
        checks.push(Check::new("analyze.flux_identity", flux_err, 0.0, FLUX_TOL, Relation::AtMost));

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.numerics.seed);
        let mut level_err: f64 = 0.0;
        for _ in 0..16 {
            let r1 = rng.gen_range(0.5f64.ln()..2f64.ln()).exp();
            let r2 = r1 * rng.gen_range(1.1f64.ln()..2.5f64.ln()).exp();
            let (lhs, rhs) = kernel.log_level_identity_check(kernel.green(r2)?, kernel.green(r1)?)?;
            level_err = level_err.max(((lhs - rhs) / rhs).abs());
        }
        checks.push(Check::new("analyze.log_level_identity", level_err, 0.0, LOG_LEVEL_TOL, Relation::AtMost));

        let fit = kernel.sandwich_fit(&table, &log_spaced(2.0, r_max, 32))?;
        checks.push(Check::new("analyze.sandwich_b", fit.b_fit, fit.b_theory, 0.0, Relation::AtMost));

        let ratios = log_spaced(0.5, r_max, 64)
            .into_iter()
            .map(|r| kernel.gradient_bound_ratio(r))
            .collect::<Result<Vec<_>, _>>()?;
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &q| (lo.min(q), hi.max(q)));
        checks.push(Check::new("analyze.gradient_ratio_cap", hi, GRADIENT_RATIO_CAP, 0.0, Relation::AtMost));

        let energy = match &weight {
            Some(w) => {
                let t = kernel.weighted_tail_energy(w, w.valid_from().max(1.0))?;
                if matches!(w.kind(), WeightKind::Green) {
                    checks.push(Check::flag("analyze.green_weight_tail_energy_converges", t.converged));
                }
                json!(t)
            }
            None => Value::Null,
        };
        green_results = json!({
            "sandwich_fit": {"b_fit": fit.b_fit, "a_fit": fit.a_fit, "b_theory": fit.b_theory, "samples": fit.samples},
            "gradient_ratio": {"min": lo, "max": hi, "samples": ratios.len()},
            "weighted_tail_energy": energy,
        });
    }
    let conformal = match &weight {
        Some(w) => json!(radpoisson_core::criterion::conformal_metric_complete(w)?),
        None => Value::Null,
    };

    let rows = log_spaced(table.base_a(), r_max, a.table_points)
        .into_iter()
        .map(|r| Ok(vec![Cell::F(r), Cell::F(table.omega(r)?), rho_at(r)?.into(), green_at(r)?.into()]))
        .collect::<Result<Vec<_>, CoreError>>()?;

    let results = json!({
        "manifold": {"kind": m.warp().kind(), "dim": m.dim(), "parabolic": parabolic, "cartan_hadamard": cartan_hadamard, "sphere_area": m.sphere_area()},
        "weight": weight.as_ref().map(|w| w.kind()),
        "conformal_metric_complete": conformal,
        "omega": {"anchor": table.base_a(), "r_max": r_max, "omega_r_max": table.omega(r_max)?},
        "probes": probes,
        "green": green_results,
    });
    let mut summary = vec![format!("{}: parabolic = {parabolic}", family_label(cfg))];
    if let Some(p) = probes_rho(&results, 2.0) {
        summary.push(format!("rho(2) = {p}"));
    }
    for s in &skipped {
        summary.push(format!("skipped {}: {}", s.name, s.reason));
    }
    Ok(Outcome {
        report: Report::new("analyze", cfg, checks, skipped, results),
        tables: vec![("analyze.csv".into(), csv(&["r", "omega", "rho", "G"], rows))],
        summary,
    })
}

fn probes_rho(results: &Value, r: f64) -> Option<f64> {
    results["probes"]
        .as_array()?
        .iter()
        .find(|p| p["r"].as_f64() == Some(r))
        .and_then(|p| p["rho"].as_f64())
}

pub fn criterion(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = cfg.criterion.clone().unwrap_or_default();
    let m = cfg.build_manifold()?;
    let f = cfg.build_source()?;
    let (m0, m_max) = (cfg.numerics.m0, cfg.numerics.m_max);
    let table = OmegaTable::new(&m, m_max as f64 + 1.0, &cfg.quadrature())?;
    let kernel = Arc::new(GreenKernel::build(&m)?);
    let parabolic = kernel.is_parabolic();
    let variant: Variant = c.variant.into();
    let report = match variant {
        Variant::Thm2 => {
            if parabolic {
                return Err(config_error("criterion.variant", "thm2 needs a non-parabolic manifold"));
            }
            if cfg.weight.kind != WeightChoice::Green {
                return Err(config_error("weight.kind", "thm2 is defined with the green weight"));
            }
            evaluate_series(variant, |k| term_thm2(&kernel, &table, &f, k, m_max), m0, m_max, c.margin)?
        }
        Variant::Thm1 => {
            let w = cfg.build_weight(&m, (!parabolic).then_some(&kernel))?;
            evaluate_series(variant, |k| term_thm1(&table, |_| Ok(w.clone()), &f, k, m_max), m0, m_max, c.margin)?
        }
    };

    let alpha = cfg.source.as_ref().map(|s| s.alpha).unwrap_or(f64::NAN);
    let model = family_threshold(cfg);
    let corollary = match &c.corollary {
        Some(k) => Some(corollary_threshold(k.gamma1, k.gamma2).map_err(|e| config_error("criterion.corollary", e))?),
        None => None,
    };
    let model_line = model.map(|a| format!("model α* = {a}"));
    let corollary_line = corollary.map(|a| format!("corollary α* = {a}"));
    let expected = model.filter(|a| (alpha - a).abs() > c.margin).map(|a| if alpha > a { Verdict::Converges } else { Verdict::Diverges });

    let rows = report
        .terms
        .iter()
        .zip(&report.partial_sums)
        .map(|(t, s)| vec![Cell::I(t.m as i64), Cell::F(t.value), Cell::F(*s)]);
    let table_csv = csv(&["m", "term", "partial_sum"], rows);

    let mut summary = vec![format!(
        "{}: {:?} verdict {:?}{}",
        family_label(cfg),
        variant,
        report.verdict,
        report.fit.map(|p| format!(" (tail exponent {:.3})", p.exponent)).unwrap_or_default()
    )];
    summary.extend(model_line.clone());
    summary.extend(corollary_line.clone());
    let results = json!({
        "alpha": alpha,
        "verdict": report.verdict,
        "thresholds": {
            "model_alpha_star": model,
            "model": model_line,
            "corollary_alpha_star": corollary,
            "corollary": corollary_line,
            "model_expectation": expected,
        },
        "criterion": report,
    });
    Ok(Outcome {
        report: Report::new("criterion", cfg, Vec::new(), Vec::new(), results),
        tables: vec![("criterion.csv".into(), table_csv)],
        summary,
    })
}

pub fn solve(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let s = cfg.solve.clone().unwrap_or_default();
    let m = cfg.build_manifold()?;
    let f = cfg.build_source()?;
    let r_max = cfg.numerics.r_max.unwrap_or(20.0);
    let normalization: Normalization = s.normalization.into();
    let kernel = match normalization {
        Normalization::VanishAtInfinity => {
            let k = GreenKernel::build(&m)?;
            if k.is_parabolic() {
                return Err(config_error("solve.normalization", "vanish_at_infinity needs a non-parabolic manifold"));
            }
            Some(k)
        }
        Normalization::ZeroAtOrigin => None,
    };
    let sol = solve_radial(&m, &f, r_max, cfg.numerics.h, normalization, kernel.as_ref()).map_err(|e| match e {
        CoreError::TailDivergence { .. } => divergence_context(cfg, e),
        e => e.into(),
    })?;
    let residual = residual_profile(&m, &sol, &f);

    let mut checks = Vec::new();
    let mut potential = Value::Null;
    if let Some(k) = &kernel {
        let p = potential_at_origin(k, &f)?;
        if p.converged {
            let rel = (p.value + sol.u[0]).abs() / p.value.abs().max(f64::MIN_POSITIVE);
            checks.push(Check::new("solve.potential_matches_u0", rel, 0.0, POTENTIAL_TOL, Relation::AtMost));
        }
        potential = json!(p);
    }

    let rows = (0..sol.grid.len()).map(|i| vec![Cell::F(sol.grid[i]), Cell::F(sol.u[i]), Cell::F(sol.u_prime[i]), residual[i].into()]);
    let table_csv = csv(&["r", "u", "u_prime", "residual"], rows);
    let step = sol.grid[1] - sol.grid[0];
    let summary = vec![format!(
        "{}: u(0) = {:.12e}, residual_max = {}",
        family_label(cfg),
        sol.u[0],
        sol.residual_max.map_or("n/a".into(), |v| format!("{v:.3e}"))
    )];
    let results = json!({
        "normalization": sol.normalization,
        "sign_convention": sol.sign_convention,
        "r_max": r_max,
        "h": step,
        "grid_points": sol.grid.len(),
        "u0": sol.u[0],
        "u_r_max": sol.u[sol.u.len() - 1],
        "residual_max": sol.residual_max,
        "potential_at_origin": potential,
    });
    Ok(Outcome {
        report: Report::new("solve", cfg, checks, Vec::new(), results),
        tables: vec![("solve.csv".into(), table_csv)],
        summary,
    })
}

fn divergence_context(cfg: &ExperimentConfig, e: CoreError) -> CliError {
    let alpha = cfg.source.as_ref().map_or(f64::NAN, |s| s.alpha);
    let context = match family_threshold(cfg) {
        Some(star) => format!("source decay alpha = {alpha} does not exceed the model threshold alpha* = {star}"),
        None => format!("source decay alpha = {alpha} is too slow for this manifold"),
    };
    CliError::NumericalContext { context, source: e }
}

pub fn sharpness(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let s = cfg.sharpness.clone().unwrap_or_default();
    let n = cfg.manifold.dim;
    let mut checks = Vec::new();
    let mut all = Vec::new();
    let mut summary = Vec::new();
    for &gamma in &s.gammas {
        let star = model_threshold(gamma);
        let alphas: Vec<f64> = s.offsets.iter().map(|o| star + o).collect();
        let rows = sharpness_scan(gamma, &alphas, n)?;
        let flips = rows.iter().all(|r| r.converged == (r.alpha > star));
        checks.push(Check::flag(format!("sharpness.gamma_{gamma}.flips_at_threshold"), flips));
        summary.push(format!(
            "gamma = {gamma}: alpha* = {star}, {}",
            rows.iter().map(|r| format!("alpha {} {}", r.alpha, if r.converged { "solvable" } else { "diverges" })).collect::<Vec<_>>().join(", ")
        ));
        all.extend(rows);
    }
    let rows = all
        .iter()
        .map(|r| vec![Cell::F(r.gamma), Cell::F(r.alpha), Cell::B(r.converged), Cell::F(r.alpha_star), Cell::F(r.potential)]);
    let table_csv = csv(&["gamma", "alpha", "converged", "alpha_star", "potential"], rows);
    let results = json!({"dim": n, "rows": all});
    Ok(Outcome {
        report: Report::new("sharpness", cfg, checks, Vec::new(), results),
        tables: vec![("sharpness.csv".into(), table_csv)],
        summary,
    })
}

pub fn verify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let v: VerifyConfig = cfg.verify.clone().unwrap_or_default();
    let checks = run_suite(cfg.numerics.seed, &v.only);
    if checks.is_empty() {
        return Err(config_error("verify.only", "no check matches the filter"));
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let mut summary = vec![format!("{} checks, {} failed", checks.len(), failed.len())];
    summary.extend(failed.iter().map(|n| format!("FAIL {n}")));
    let results = json!({"checks_run": checks.len(), "failed": failed});
    Ok(Outcome {
        report: Report::new("verify", cfg, checks, Vec::new(), results),
        tables: Vec::new(),
        summary,
    })
}
