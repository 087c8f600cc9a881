//! Admissibility series for a source `f` and closed-form decay thresholds.
//!
//! For a rate table ω and a weight ρ the series terms are
//!
//! * variant 1: `(ω(m+1) − ω(m) + 1) · sup_{r≥m} |f/ρ_m|`
//! * variant 2: `(ω(m+1) − ω(m)) · sup_{r≥m} |f|/ρ` with the Green weight.
//!
//! Summability is judged from a power-law fit of the tail of the terms.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::OmegaTable;
use crate::green::{GreenKernel, WeightFunction};
use crate::numerics::{fit_power_law, sup_on, try_integrate_tail, PowerFit, QuadratureConfig, SupConfig};

pub const DEFAULT_M0: usize = 2;
pub const DEFAULT_M_MAX: usize = 512;
pub const DEFAULT_MARGIN: f64 = 0.15;
/// Log-slope at the sampling horizon above which a tail supremum counts as
/// unbounded.
pub const GROWTH_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SourceKind {
    /// f(r) = C / (1 + r)^α.
    PowerDecay { c: f64, alpha: f64 },
    Custom,
}

/// Radial source term `f` of `Δu = f`.
#[derive(Clone)]
pub struct SourceFunction {
    kind: SourceKind,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for SourceFunction {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt.debug_struct("SourceFunction").field("kind", &self.kind).finish()
    }
}

impl SourceFunction {
    pub fn power_decay(c: f64, alpha: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("power decay source needs C > 0 and finite alpha, got C = {c}, alpha = {alpha}")));
        }
        Ok(Self {
            kind: SourceKind::PowerDecay { c, alpha },
            f: Arc::new(move |r: f64| c * (1.0 + r).powf(-alpha)),
        })
    }

    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self {
            kind: SourceKind::Custom,
            f: Arc::new(f),
        }
    }

    pub fn zero() -> Self {
        Self::custom(|_| 0.0)
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    /// `c · f`.
    pub fn scaled(&self, c: f64) -> Self {
        let f = self.f.clone();
        let kind = match self.kind {
            SourceKind::PowerDecay { c: c0, alpha } if c > 0.0 => SourceKind::PowerDecay { c: c * c0, alpha },
            _ => SourceKind::Custom,
        };
        Self {
            kind,
            f: Arc::new(move |r| c * f(r)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `(Δω_m + 1) · sup |f/ρ_m|`.
    Thm1,
    /// `Δω_m · sup |f|/ρ` with the Green weight.
    Thm2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Term {
    pub m: usize,
    /// `+∞` (serialised as null) when the tail supremum is unbounded.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub variant: Variant,
    pub terms: Vec<Term>,
    pub partial_sums: Vec<f64>,
    /// Fit over the tail half of the indices; absent when those terms are
    /// not all positive and finite.
    pub fit: Option<PowerFit>,
    pub verdict: Verdict,
    pub margin: f64,
    /// Decay faster than any power was detected.
    pub superpolynomial: bool,
    /// First index whose supremum is unbounded.
    pub unbounded_from: Option<usize>,
}

/// Horizon of the tail suprema, `max(10 m_max, 10⁴)`.
pub fn sup_horizon(m_max: usize) -> f64 {
    (10.0 * m_max as f64).max(1e4)
}

/// `sup_{r ≥ m} |f(r)| / ρ(r)` sampled up to `horizon`; growth still visible
/// at the horizon is reported as [`Error::Unbounded`].
pub fn tail_sup(f: &SourceFunction, rho: &WeightFunction, m: f64, horizon: f64) -> Result<f64> {
    let cfg = SupConfig {
        horizon,
        ..SupConfig::default()
    };
    let failure = std::cell::RefCell::new(None);
    let ratio = |r: f64| match rho.eval(r) {
        Ok(w) => f.eval(r).abs() / w,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let s = sup_on(ratio, m, f64::INFINITY, &cfg);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let s = s?;
    let near_horizon = s.argsup >= 0.5 * s.right_end;
    if near_horizon && !s.monotone_tail && s.end_log_slope > GROWTH_SLOPE {
        return Err(Error::Unbounded {
            x: s.argsup,
            value: s.value,
        });
    }
    Ok(s.value)
}

/// Variant-1 term with weight family `m ↦ ρ_m`.
pub fn term_thm1<W>(table: &OmegaTable, rho_family: W, f: &SourceFunction, m: usize, m_max: usize) -> Result<f64>
where
    W: Fn(usize) -> Result<WeightFunction>,
{
    let rho = rho_family(m)?;
    let inc = table.omega_increment(m as f64)?;
    let sup = tail_sup(f, &rho, (m as f64).max(rho.valid_from()), sup_horizon(m_max))?;
    Ok((inc + 1.0) * sup)
}

/// Variant-2 term with the Green weight of `kernel`.
pub fn term_thm2(kernel: &Arc<GreenKernel>, table: &OmegaTable, f: &SourceFunction, m: usize, m_max: usize) -> Result<f64> {
    let rho = crate::green::green_weight(kernel.clone())?;
    let inc = table.omega_increment(m as f64)?;
    let sup = tail_sup(f, &rho, m as f64, sup_horizon(m_max))?;
    Ok(inc * sup)
}

/// Evaluates `term(m)` for `m0 ≤ m ≤ m_max` in parallel and classifies the
/// series.
pub fn evaluate_series<T>(variant: Variant, term: T, m0: usize, m_max: usize, margin: f64) -> Result<CriterionReport>
where
    T: Fn(usize) -> Result<f64> + Sync,
{
    if m_max < m0 + 16 {
        return Err(Error::InvalidConfig(format!("m_max = {m_max} must be at least m0 + 16 = {}", m0 + 16)));
    }
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::InvalidConfig(format!("margin must lie in [0, 1), got {margin}")));
    }
    let raw: Vec<Result<f64>> = (m0..=m_max).into_par_iter().map(&term).collect();
    let mut terms = Vec::with_capacity(raw.len());
    let mut unbounded_from = None;
    for (m, r) in (m0..=m_max).zip(raw) {
        let value = match r {
            Ok(v) => v,
            Err(Error::Unbounded { .. }) => {
                unbounded_from.get_or_insert(m);
                f64::INFINITY
            }
            Err(e) => return Err(e),
        };
        terms.push(Term { m, value });
    }
    let mut partial_sums = Vec::with_capacity(terms.len());
    let mut sum = 0.0;
    for t in &terms {
        sum += t.value;
        partial_sums.push(sum);
    }

    let tail: Vec<(f64, f64)> = terms[terms.len() / 2..].iter().map(|t| (t.m as f64, t.value)).collect();
    let all_zero = tail.iter().all(|t| t.1 == 0.0);
    let usable = tail.iter().all(|t| t.1 > 0.0 && t.1.is_finite());
    let fit = if usable { Some(fit_power_law(&tail)?) } else { None };

    let mut superpolynomial = false;
    let verdict = if unbounded_from.is_some() {
        Verdict::Diverges
    } else if all_zero || underflowed(&tail) {
        superpolynomial = !all_zero;
        Verdict::Converges
    } else if let Some(fit) = &fit {
        let half = tail.len() / 2;
        let early = fit_power_law(&tail[..half])?.exponent;
        let late = fit_power_law(&tail[half..])?.exponent;
        superpolynomial = late < early - 1.0 && late < -1.0 - margin;
        if superpolynomial || fit.exponent < -1.0 - margin {
            Verdict::Converges
        } else if fit.exponent > -1.0 + margin {
            Verdict::Diverges
        } else {
            Verdict::Inconclusive
        }
    } else {
        Verdict::Inconclusive
    };

    Ok(CriterionReport {
        variant,
        terms,
        partial_sums,
        fit,
        verdict,
        margin,
        superpolynomial,
        unbounded_from,
    })
}

// Positive terms that decay to exact zeros.
fn underflowed(tail: &[(f64, f64)]) -> bool {
    let first_zero = tail.iter().position(|t| t.1 == 0.0);
    match first_zero {
        Some(i) => i > 0 && tail[i..].iter().all(|t| t.1 == 0.0) && tail[..i].windows(2).all(|w| w[1].1 <= w[0].1),
        None => false,
    }
}

/// Decay exponent above which the corollary guarantees solvability on a
/// manifold with curvature between `-r^{γ1}` and `-r^{γ2}`.
pub fn corollary_threshold(gamma1: f64, gamma2: f64) -> Result<f64> {
    if !(gamma1 >= gamma2 && gamma1 >= 0.0) || !gamma1.is_finite() || !gamma2.is_finite() {
        return Err(Error::InvalidExponents { gamma1, gamma2 });
    }
    Ok(if gamma2 >= -2.0 {
        1.0 + 0.5 * gamma1 - gamma2
    } else {
        3.0 + 0.5 * gamma1
    })
}

/// Sharp decay threshold on the model with curvature `-r^γ`.
pub fn model_threshold(gamma: f64) -> f64 {
    if gamma > -2.0 {
        1.0 - 0.5 * gamma
    } else {
        2.0
    }
}

/// Completeness of the conformal metric `ρ g` along rays:
/// `∫^∞ √ρ = ∞`. Advisory only.
pub fn conformal_metric_complete(rho: &WeightFunction) -> Result<bool> {
    let t = try_integrate_tail(|r| Ok(rho.eval(r)?.sqrt()), rho.valid_from().max(1.0), &QuadratureConfig::default())?;
    Ok(!t.converged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelManifold;
    use crate::green::{green_weight, hardy_weight};

    fn setup(m: ModelManifold, r_max: f64) -> (Arc<GreenKernel>, OmegaTable) {
        let k = Arc::new(GreenKernel::build(&m).unwrap());
        let t = OmegaTable::new(&m, r_max, &QuadratureConfig::default()).unwrap();
        (k, t)
    }

    #[test]
    fn thresholds() {
        assert_eq!(corollary_threshold(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(corollary_threshold(2.0, 1.0).unwrap(), 1.0);
        assert_eq!(corollary_threshold(0.0, -3.0).unwrap(), 3.0);
        assert!(matches!(corollary_threshold(-1.0, -2.0), Err(Error::InvalidExponents { .. })));
        assert!(matches!(corollary_threshold(1.0, 2.0), Err(Error::InvalidExponents { .. })));
        assert_eq!(model_threshold(0.0), 1.0);
        assert_eq!(model_threshold(-2.0), 2.0);
        assert_eq!(model_threshold(2.0), 0.0);
        assert_eq!(model_threshold(-3.0), 2.0);
    }

    #[test]
    fn flat_thm1_term_matches_grid_scan() {
        let m = ModelManifold::euclidean(3).unwrap();
        let (k, t) = setup(m, 64.0);
        let rho = green_weight(k).unwrap();
        let f = SourceFunction::power_decay(1.0, 3.0).unwrap();
        let mm = 40;
        let scan = (0..=100_000)
            .map(|i| {
                let r = mm as f64 + i as f64 * 0.1;
                f.eval(r) * 4.0 * r * r
            })
            .fold(0.0, f64::max);
        let closed = 4.0 * 1600.0 / 41f64.powi(3);
        assert!((scan - closed).abs() < 1e-12);
        let term = term_thm1(&t, |_| Ok(rho.clone()), &f, mm, 512).unwrap();
        let inc = t.omega_increment(40.0).unwrap();
        assert!((term - (inc + 1.0) * closed).abs() < 1e-10);
    }

    #[test]
    fn zero_source_gives_zero_terms() {
        let m = ModelManifold::euclidean(3).unwrap();
        let (k, t) = setup(m, 64.0);
        let f = SourceFunction::zero();
        assert_eq!(term_thm2(&k, &t, &f, 5, 512).unwrap(), 0.0);
        let r = evaluate_series(Variant::Thm2, |m| term_thm2(&k, &t, &f, m, 40), 2, 40, DEFAULT_MARGIN).unwrap();
        assert_eq!(r.verdict, Verdict::Converges);
    }

    #[test]
    fn unbounded_supremum_is_reported() {
        let m = ModelManifold::euclidean(3).unwrap();
        let (k, t) = setup(m, 64.0);
        let f = SourceFunction::power_decay(1.0, 1.5).unwrap();
        assert!(matches!(term_thm2(&k, &t, &f, 10, 512), Err(Error::Unbounded { .. })));
        // α = 2 saturates: |f|/ρ → 4 from below.
        let f2 = SourceFunction::power_decay(1.0, 2.0).unwrap();
        let v = term_thm2(&k, &t, &f2, 10, 512).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn synthetic_series_verdicts() {
        let conv = evaluate_series(Variant::Thm2, |m| Ok((m as f64).powf(-2.0)), 2, 512, 0.15).unwrap();
        assert_eq!(conv.verdict, Verdict::Converges);
        assert!((conv.fit.unwrap().exponent + 2.0).abs() < 1e-9);
        let div = evaluate_series(Variant::Thm2, |m| Ok((m as f64).powf(-0.5)), 2, 512, 0.15).unwrap();
        assert_eq!(div.verdict, Verdict::Diverges);
        let edge = evaluate_series(Variant::Thm2, |m| Ok(1.0 / m as f64), 2, 512, 0.15).unwrap();
        assert_eq!(edge.verdict, Verdict::Inconclusive);
        let fast = evaluate_series(Variant::Thm2, |m| Ok((-(m as f64)).exp()), 2, 512, 0.15).unwrap();
        assert_eq!(fast.verdict, Verdict::Converges);
        assert!(fast.superpolynomial);
        assert!(conv.partial_sums.windows(2).all(|w| w[1] >= w[0]));
        assert!(evaluate_series(Variant::Thm2, |_| Ok(1.0), 2, 10, 0.15).is_err());
    }

    #[test]
    fn hardy_weight_completeness_advisory() {
        let e = ModelManifold::euclidean(3).unwrap();
        assert!(conformal_metric_complete(&hardy_weight(&e, -2.0, 0.25).unwrap()).unwrap());
        // The clamped branch still decays like r^{-2}, so √ρ is not integrable.
        assert!(conformal_metric_complete(&hardy_weight(&e, -3.0, 1.0).unwrap()).unwrap());
    }
}
