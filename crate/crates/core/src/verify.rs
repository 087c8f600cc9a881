//! Named invariant checks across all modules. Every check is a pure
//! function of the seed, so a run can be repeated check by check.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::criterion::{
    evaluate_series, model_threshold, term_thm1, term_thm2, SourceFunction, Variant, Verdict, DEFAULT_MARGIN,
};
use crate::error::{Error, Result};
use crate::geometry::{ModelManifold, OmegaTable, Warping};
use crate::green::{green_weight, hardy_weight, poincare_spot_check, GreenKernel};
use crate::numerics::{fit_power_law, integrate, integrate_tail, sup_on, QuadratureConfig, SupConfig};
use crate::solver::{
    asymptotic_tail_check, family_for_gamma, potential_at_origin, residual_check, solve_radial, Normalization,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// |value − expected| ≤ tolerance.
    Within,
    /// value ≤ expected + tolerance.
    AtMost,
    /// value ≥ expected − tolerance.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, expected: f64, tolerance: f64, relation: Relation) -> Self {
        let pass = match relation {
            Relation::Within => (value - expected).abs() <= tolerance,
            Relation::AtMost => value <= expected + tolerance,
            Relation::AtLeast => value >= expected - tolerance,
        };
        Self {
            name: name.into(),
            value,
            expected,
            tolerance,
            relation,
            pass,
            note: None,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, 1.0, 0.0, Relation::Within)
    }

    fn failed(name: impl Into<String>, err: &Error) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            expected: f64::NAN,
            tolerance: 0.0,
            relation: Relation::Within,
            pass: false,
            note: Some(err.to_string()),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

type Group = fn(u64) -> Result<Vec<Check>>;

/// Check groups in report order. Check names start with the group name.
pub const GROUPS: &[(&str, Group)] = &[
    ("numerics.linearity", numerics_linearity),
    ("numerics.tail_consistency", numerics_tail_consistency),
    ("numerics.sup_monotone", numerics_sup_monotone),
    ("numerics.power_fit", numerics_power_fit),
    ("geometry.derivatives", geometry_derivatives),
    ("geometry.k_sup", geometry_k_sup),
    ("geometry.omega", geometry_omega),
    ("green.kernel", green_kernel),
    ("green.identities", green_identities),
    ("green.estimates", green_estimates),
    ("green.poincare", green_poincare),
    ("criterion.properties", criterion_properties),
    ("criterion.verdicts", criterion_verdicts),
    ("solver.manufactured", solver_manufactured),
    ("solver.representations", solver_representations),
    ("solver.sharpness", solver_sharpness),
];

/// Runs every group whose name starts with one of `only` (all groups when
/// `only` is empty). Groups run in parallel; output order is fixed.
pub fn run_suite(seed: u64, only: &[String]) -> Vec<Check> {
    let selected: Vec<&(&str, Group)> = GROUPS
        .iter()
        .filter(|(name, _)| only.is_empty() || only.iter().any(|o| name.starts_with(o.as_str()) || o.starts_with(name)))
        .collect();
    let per_group: Vec<Vec<Check>> = selected
        .par_iter()
        .map(|(name, group)| {
            let group_seed = seed ^ fnv1a(name);
            match group(group_seed) {
                Ok(checks) => checks,
                Err(e) => vec![Check::failed(*name, &e)],
            }
        })
        .collect();
    per_group
        .into_iter()
        .flatten()
        .filter(|c| only.is_empty() || only.iter().any(|o| c.name.starts_with(o.as_str()) || o.starts_with(&c.name)))
        .collect()
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Built-in families used by the checks.
pub fn builtin_families() -> Vec<(&'static str, ModelManifold)> {
    let m = |w: Result<Warping>| ModelManifold::new(3, w.expect("built-in parameters are valid")).expect("n = 3");
    vec![
        ("euclidean3", ModelManifold::euclidean(3).expect("n = 3")),
        ("euclidean5", ModelManifold::euclidean(5).expect("n = 5")),
        ("hyperbolic3", ModelManifold::hyperbolic(3).expect("n = 3")),
        ("power_exp_b0.2_g1", m(Warping::power_exp(0.2, 1.0))),
        ("power_exp_b1_g0", m(Warping::power_exp(1.0, 0.0))),
        ("power_exp_b1_g2", m(Warping::power_exp(1.0, 2.0))),
        ("power_law_d2", m(Warping::power_law(2.0))),
        ("linear_tail", m(Ok(Warping::linear_tail()))),
    ]
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn numerics_linearity(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = QuadratureConfig::default();
    let mut worst: f64 = 0.0;
    for _ in 0..16 {
        let p: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let q: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (al, be) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let (a, b) = (rng.gen_range(-1.0..0.0), rng.gen_range(0.5..2.0));
        let poly = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
        let lhs = integrate(|x| al * poly(&p, x) + be * poly(&q, x), a, b, &cfg)?;
        let rhs = al * integrate(|x| poly(&p, x), a, b, &cfg)? + be * integrate(|x| poly(&q, x), a, b, &cfg)?;
        let tol = cfg.abs_tol.max(cfg.rel_tol * lhs.abs());
        worst = worst.max((lhs - rhs).abs() / tol);
    }
    Ok(vec![Check::new("numerics.linearity.polynomial_pairs", worst, 0.0, 3.0, Relation::AtMost)
        .with_note("max |I(af+bg) - aI(f) - bI(g)| in units of the tolerance")])
}

fn numerics_tail_consistency(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = QuadratureConfig::default();
    let f = |t: f64| t.powi(-2);
    let mut worst: f64 = 0.0;
    for _ in 0..16 {
        let a = rng.gen_range(1.0..99.0);
        let b = rng.gen_range(a..100.0);
        let gap = integrate_tail(f, a, &cfg)?.value - integrate(f, a, b, &cfg)? - integrate_tail(f, b, &cfg)?.value;
        worst = worst.max(gap.abs());
    }
    let tol = 3.0 * cfg.abs_tol.max(cfg.rel_tol);
    Ok(vec![Check::new("numerics.tail_consistency.inverse_square", worst, 0.0, tol, Relation::AtMost)])
}

fn numerics_sup_monotone(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    for _ in 0..16 {
        let a = rng.gen_range(0.1..50.0);
        let p = rng.gen_range(0.1..4.0);
        let s = sup_on(|r: f64| (1.0 + r).powf(-p), a, f64::INFINITY, &SupConfig::default())?;
        ok &= s.argsup == a && s.monotone_tail;
    }
    Ok(vec![Check::flag("numerics.sup_monotone.argsup_left_end", ok)])
}

fn numerics_power_fit(_seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for p in [-2.0, -1.5, -0.5, 1.0] {
        let pts: Vec<(f64, f64)> = (8..=64).map(|m| (m as f64, 3.0 * (m as f64).powf(p))).collect();
        let fit = fit_power_law(&pts)?;
        out.push(Check::new(format!("numerics.power_fit.exponent_{p}"), fit.exponent, p, 1e-6, Relation::Within));
    }
    Ok(out)
}

fn geometry_derivatives(_seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (name, m) in builtin_families() {
        let warp = m.warp();
        let knots = warp.knots();
        let mut worst: f64 = 0.0;
        let mut positive = true;
        for r in log_spaced(0.01, 1e3, 64) {
            if knots.iter().any(|k| (r - k).abs() < 1e-3) {
                continue;
            }
            // Central differences of log φ, scale free.
            let h = 1e-5 * r.max(1.0);
            let l = |x: f64| warp.local(x).log_phi;
            let d1 = (l(r + h) - l(r - h)) / (2.0 * h);
            let d2 = (l(r + h) - 2.0 * l(r) + l(r - h)) / (h * h);
            let loc = warp.local(r);
            positive &= loc.log_phi.is_finite();
            let e1 = (d1 - loc.dlog).abs() / loc.dlog.abs().max(1.0);
            let curv_fd = d2 + d1 * d1;
            let e2 = (curv_fd - loc.curv).abs() / loc.curv.abs().max(d1 * d1).max(1.0);
            worst = worst.max(e1).max(e2);
        }
        out.push(Check::new(format!("geometry.derivatives.{name}"), worst, 0.0, 1e-5, Relation::AtMost));
        out.push(Check::flag(format!("geometry.derivatives.{name}.finite_positive"), positive));
    }
    Ok(out)
}

fn geometry_k_sup(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (name, m) in builtin_families() {
        let mut dominated = true;
        let mut branches = true;
        for _ in 0..4 {
            let r = rng.gen_range(2.0..200.0);
            let half = rng.gen_range(0.1..0.9) * r;
            let k = m.k_sup(r, half)?;
            for _ in 0..32 {
                let t = rng.gen_range(r - half..=r + half);
                dominated &= k >= m.warp().local(t).curv - 1e-12 * k.abs().max(1.0);
            }
            let q = m.q_of(r, half)?;
            let i = m.i_of(r, half)?;
            branches &= q >= k && q >= i / half && q >= 1.0 / (half * half);
        }
        out.push(Check::flag(format!("geometry.k_sup.{name}.dominates_samples"), dominated));
        out.push(Check::flag(format!("geometry.k_sup.{name}.q_dominates_branches"), branches));
    }
    Ok(out)
}

fn geometry_omega(_seed: u64) -> Result<Vec<Check>> {
    let cfg = QuadratureConfig::default();
    let cases: Vec<(&str, Warping, f64)> = vec![
        ("power_exp_g0", Warping::power_exp(1.0, 0.0)?, 0.0),
        ("power_exp_g1", Warping::power_exp(1.0, 1.0)?, 0.5),
        ("power_exp_g2", Warping::power_exp(1.0, 2.0)?, 1.0),
        ("euclidean", Warping::euclidean(), -1.0),
        ("linear_tail", Warping::linear_tail(), -1.0),
    ];
    let mut out = Vec::new();
    for (name, warp, expected) in cases {
        let m = ModelManifold::new(3, warp)?;
        let t = OmegaTable::new(&m, 513.0, &cfg)?;
        out.push(Check::flag(
            format!("geometry.omega.{name}.nondecreasing"),
            t.cumulative().windows(2).all(|w| w[1] >= w[0]) && t.omega(1.0)? == 0.0,
        ));
        let pts = (32..=512)
            .map(|k| Ok((k as f64, t.omega_increment(k as f64)?)))
            .collect::<Result<Vec<_>>>()?;
        let fit = fit_power_law(&pts)?;
        out.push(Check::new(format!("geometry.omega.{name}.increment_exponent"), fit.exponent, expected, 0.05, Relation::Within));
    }
    Ok(out)
}

fn green_kernel(_seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (name, m) in builtin_families() {
        let k = GreenKernel::build(&m)?;
        out.push(Check::flag(format!("green.kernel.{name}.nonparabolic"), !k.is_parabolic()));
        let radii = log_spaced(0.5, 500.0, 128);
        let logs = radii.iter().map(|&r| k.log_green(r)).collect::<Result<Vec<_>>>()?;
        out.push(Check::flag(format!("green.kernel.{name}.strictly_decreasing"), logs.windows(2).all(|w| w[1] < w[0])));
    }
    let mut worst: f64 = 0.0;
    for n in [3usize, 4, 5, 8] {
        let k = Arc::new(GreenKernel::build(&ModelManifold::euclidean(n)?)?);
        let w = green_weight(k)?;
        let c = ((n - 2) * (n - 2)) as f64 / 4.0;
        for r in log_spaced(0.01, 1e4, 32) {
            worst = worst.max((w.eval(r)? * r * r / c - 1.0).abs());
        }
    }
    out.push(Check::new("green.kernel.hardy_weight_euclidean", worst, 0.0, 1e-10, Relation::AtMost));
    Ok(out)
}

fn green_identities(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (name, m) in builtin_families() {
        let k = GreenKernel::build(&m)?;
        let mut flux: f64 = 0.0;
        for r in log_spaced(0.5, 5.0, 16) {
            flux = flux.max((k.flux_identity_check(k.green(r)?)? - 1.0).abs());
        }
        out.push(Check::new(format!("green.identities.{name}.flux"), flux, 0.0, 1e-8, Relation::AtMost));
        let mut gap: f64 = 0.0;
        for _ in 0..16 {
            let mut r1 = rng.gen_range(0.5f64.ln()..5f64.ln()).exp();
            let mut r2 = rng.gen_range(0.5f64.ln()..5f64.ln()).exp();
            if r1 > r2 {
                std::mem::swap(&mut r1, &mut r2);
            }
            if r2 / r1 < 1.01 {
                r2 = r1 * 1.5;
            }
            let (lhs, rhs) = k.log_level_identity_check(k.green(r2)?, k.green(r1)?)?;
            gap = gap.max(((lhs - rhs) / rhs).abs());
        }
        out.push(Check::new(format!("green.identities.{name}.log_level"), gap, 0.0, 1e-6, Relation::AtMost));
    }
    Ok(out)
}

fn green_estimates(_seed: u64) -> Result<Vec<Check>> {
    let cfg = QuadratureConfig::default();
    let mut out = Vec::new();
    let mut ratio_max: f64 = 0.0;
    let mut ratio_ok = true;
    for (name, m) in builtin_families() {
        let k = Arc::new(GreenKernel::build(&m)?);
        for r in log_spaced(2.0, 200.0, 32) {
            let q = k.gradient_bound_ratio(r)?;
            ratio_ok &= q > 0.0 && q.is_finite();
            ratio_max = ratio_max.max(q);
        }
        let t = OmegaTable::new(&m, 100.0, &cfg)?;
        let fit = k.sandwich_fit(&t, &log_spaced(2.0, 100.0, 32))?;
        out.push(Check::new(format!("green.estimates.{name}.sandwich_b"), fit.b_fit, fit.b_theory, 0.0, Relation::AtMost));
        let w = green_weight(k.clone())?;
        out.push(Check::flag(format!("green.estimates.{name}.tail_energy_converges"), k.weighted_tail_energy(&w, 1.0)?.converged));
    }
    out.push(Check::flag("green.estimates.gradient_ratio_positive", ratio_ok));
    out.push(Check::new("green.estimates.gradient_ratio_cap", ratio_max, 16.0, 0.0, Relation::AtMost));
    Ok(out)
}

fn green_poincare(seed: u64) -> Result<Vec<Check>> {
    let m = ModelManifold::euclidean(3)?;
    let rho = hardy_weight(&m, -2.0, 0.25)?;
    let c = poincare_spot_check(&m, &rho, 256, (1.0, 1e4), seed)?;
    let s = poincare_spot_check(&m, &rho.scaled(4.0)?, 256, (1.0, 1e4), seed)?;
    Ok(vec![
        Check::new("green.poincare.hardy_worst_ratio", c.worst_ratio, 1.0, 0.02, Relation::AtMost),
        Check::new("green.poincare.scaled_weight_violation", s.worst_ratio, 1.0, 0.0, Relation::AtLeast)
            .with_note("the 4x weight must exceed 1 on the near-optimizer"),
    ])
}

fn setup(m: &ModelManifold) -> Result<(Arc<GreenKernel>, OmegaTable)> {
    let k = Arc::new(GreenKernel::build(m)?);
    let t = OmegaTable::new(m, 513.0, &QuadratureConfig::default())?;
    Ok((k, t))
}

fn thm2_report(k: &Arc<GreenKernel>, t: &OmegaTable, f: &SourceFunction) -> Result<Verdict> {
    Ok(evaluate_series(Variant::Thm2, |m| term_thm2(k, t, f, m, 512), 2, 512, DEFAULT_MARGIN)?.verdict)
}

fn criterion_properties(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = ModelManifold::hyperbolic(3)?;
    let (k, t) = setup(&m)?;
    let f = SourceFunction::power_decay(1.0, 1.5)?;
    let c = rng.gen_range(0.5..20.0);
    let fc = f.scaled(c);
    let g = SourceFunction::power_decay(2.0, 1.5)?;
    let rho = green_weight(k.clone())?;
    let (mut scale_gap, mut mono, mut thm1_ge): (f64, bool, bool) = (0.0, true, true);
    for _ in 0..16 {
        let mm = rng.gen_range(2..=512);
        let a = term_thm2(&k, &t, &f, mm, 512)?;
        let b = term_thm2(&k, &t, &fc, mm, 512)?;
        scale_gap = scale_gap.max((b / (c * a) - 1.0).abs());
        mono &= a <= term_thm2(&k, &t, &g, mm, 512)?;
        thm1_ge &= term_thm1(&t, |_| Ok(rho.clone()), &f, mm, 512)? >= a;
    }
    let same = thm2_report(&k, &t, &f)? == thm2_report(&k, &t, &fc)?;
    Ok(vec![
        Check::new("criterion.properties.scaling_covariance", scale_gap, 0.0, 1e-12, Relation::AtMost),
        Check::flag("criterion.properties.scaling_keeps_verdict", same),
        Check::flag("criterion.properties.monotone_in_source", mono),
        Check::flag("criterion.properties.thm1_dominates_thm2", thm1_ge),
    ])
}

fn criterion_verdicts(_seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for gamma in [2.0, 0.0, -2.0, -3.0] {
        let m = ModelManifold::new(3, family_for_gamma(gamma)?)?;
        let (k, t) = setup(&m)?;
        let star = model_threshold(gamma);
        let below = thm2_report(&k, &t, &SourceFunction::power_decay(1.0, star - 0.5)?)?;
        let above = thm2_report(&k, &t, &SourceFunction::power_decay(1.0, star + 0.5)?)?;
        out.push(
            Check::flag(format!("criterion.verdicts.gamma_{gamma}"), below == Verdict::Diverges && above == Verdict::Converges)
                .with_note(format!("alpha* = {star}: {below:?} below, {above:?} above")),
        );
    }
    let flat = ModelManifold::euclidean(3)?;
    let (k, t) = setup(&flat)?;
    let low = thm2_report(&k, &t, &SourceFunction::power_decay(1.0, 1.5)?)?;
    let high = thm2_report(&k, &t, &SourceFunction::power_decay(1.0, 2.5)?)?;
    out.push(Check::flag("criterion.verdicts.flat_flip", low == Verdict::Diverges && high == Verdict::Converges));
    Ok(out)
}

// f = Δ e^{-r²} on the given model.
fn manufactured(m: &ModelManifold) -> SourceFunction {
    let n = m.dim() as f64;
    let warp = m.warp().clone();
    SourceFunction::custom(move |r: f64| {
        if r == 0.0 {
            return -2.0 * n;
        }
        let e = (-r * r).exp();
        (4.0 * r * r - 2.0) * e - 2.0 * (n - 1.0) * warp.local(r).dlog * r * e
    })
}

fn solver_manufactured(_seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (name, m) in builtin_families() {
        let f = manufactured(&m);
        let coarse = solve_radial(&m, &f, 20.0, 5e-3, Normalization::ZeroAtOrigin, None)?;
        let fine = solve_radial(&m, &f, 20.0, 2.5e-3, Normalization::ZeroAtOrigin, None)?;
        let err = coarse
            .grid
            .iter()
            .zip(&coarse.u)
            .fold(0.0f64, |a, (r, u)| a.max((u - ((-r * r).exp() - 1.0)).abs()));
        out.push(Check::new(format!("solver.manufactured.{name}.solution_error"), err, 0.0, 1e-6, Relation::AtMost));
        let ratio = residual_check(&m, &coarse, &f)? / residual_check(&m, &fine, &f)?;
        out.push(Check::new(format!("solver.manufactured.{name}.residual_ratio"), ratio, 4.0, 0.5, Relation::Within));
    }
    let e = ModelManifold::euclidean(3)?;
    let six = SourceFunction::custom(|_| 6.0);
    let sol = solve_radial(&e, &six, 20.0, 5e-3, Normalization::ZeroAtOrigin, None)?;
    out.push(Check::new("solver.manufactured.constant_source_residual", residual_check(&e, &sol, &six)?, 0.0, 1e-8, Relation::AtMost));
    Ok(out)
}

fn solver_representations(_seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let cases: Vec<(&str, ModelManifold, f64, f64)> = vec![
        ("euclidean3", ModelManifold::euclidean(3)?, 4.0, 40.0),
        ("hyperbolic3", ModelManifold::hyperbolic(3)?, 1.5, 20.0),
        ("power_law_d2", ModelManifold::new(3, Warping::power_law(2.0)?)?, 3.0, 40.0),
    ];
    for (name, m, alpha, r_max) in cases {
        let k = GreenKernel::build(&m)?;
        let f = SourceFunction::power_decay(1.0, alpha)?;
        let p = potential_at_origin(&k, &f)?;
        let sol = solve_radial(&m, &f, r_max, 5e-3, Normalization::VanishAtInfinity, Some(&k))?;
        out.push(Check::new(format!("solver.representations.{name}.fubini"), (p.value + sol.u[0]).abs() / p.value.abs(), 0.0, 1e-6, Relation::AtMost));

        let g = SourceFunction::custom(|r: f64| (-r).exp() * (1.0 + r * r).recip());
        let (a, b) = (1.7, -0.6);
        let fg = {
            let (f, g) = (f.clone(), g.clone());
            SourceFunction::custom(move |r| a * f.eval(r) + b * g.eval(r))
        };
        let uf = solve_radial(&m, &f, r_max, 5e-3, Normalization::ZeroAtOrigin, None)?;
        let ug = solve_radial(&m, &g, r_max, 5e-3, Normalization::ZeroAtOrigin, None)?;
        let ufg = solve_radial(&m, &fg, r_max, 5e-3, Normalization::ZeroAtOrigin, None)?;
        let gap = (0..ufg.u.len()).fold(0.0f64, |acc, i| acc.max((ufg.u[i] - a * uf.u[i] - b * ug.u[i]).abs()));
        out.push(Check::new(format!("solver.representations.{name}.linearity"), gap, 0.0, 5e-9, Relation::AtMost));
    }
    Ok(out)
}

fn solver_sharpness(_seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for gamma in [2.0, 0.0, -2.0, -3.0] {
        let star = model_threshold(gamma);
        let rows = crate::solver::sharpness_scan(gamma, &[star - 0.5, star + 0.5], 3)?;
        let m = ModelManifold::new(3, family_for_gamma(gamma)?)?;
        let (k, t) = setup(&m)?;
        let mut agree = true;
        for row in &rows {
            let v = thm2_report(&k, &t, &SourceFunction::power_decay(1.0, row.alpha)?)?;
            agree &= (v == Verdict::Converges) == row.converged && v != Verdict::Inconclusive;
        }
        out.push(Check::flag(format!("solver.sharpness.gamma_{gamma}.flip"), !rows[0].converged && rows[1].converged));
        out.push(Check::flag(format!("solver.sharpness.gamma_{gamma}.criterion_agrees"), agree));
        let probes = log_spaced(8.0, 1024.0, 8);
        let a = asymptotic_tail_check(gamma, 3, &probes)?;
        out.push(Check::new(format!("solver.sharpness.gamma_{gamma}.tail_exponent"), a.fitted, a.predicted, 0.1, Relation::Within));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert!(Check::new("a", 1.0, 1.05, 0.1, Relation::Within).pass);
        assert!(!Check::new("a", 1.2, 1.05, 0.1, Relation::Within).pass);
        assert!(Check::new("a", 1.0, 1.0, 0.0, Relation::AtMost).pass);
        assert!(!Check::new("a", 0.5, 1.0, 0.1, Relation::AtLeast).pass);
        assert!(!Check::new("a", f64::NAN, 1.0, 0.1, Relation::AtMost).pass);
    }

    #[test]
    fn filtered_run_is_deterministic() {
        let only = vec!["numerics".to_string(), "green.poincare".to_string()];
        let a = run_suite(3, &only);
        let b = run_suite(3, &only);
        assert_eq!(a, b);
        assert!(a.iter().all(|c| c.name.starts_with("numerics") || c.name.starts_with("green.poincare")));
        assert!(a.iter().all(|c| c.pass), "{a:#?}");
    }
}
