use serde::Serialize;

use super::quad::{integrate, QuadratureConfig};
use crate::error::{Error, Result};

/// Outcome of an improper integral over `[a, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailResult {
    /// Best available value. When `converged` is false this is the partial
    /// integral up to `horizon` (or the last extrapolation) and carries no
    /// guarantee.
    pub value: f64,
    pub converged: bool,
    /// Largest truncation point that was integrated explicitly.
    pub horizon: f64,
}

const MAX_SEGMENTS: i32 = 160;
const RATIO_STABILITY: f64 = 1e-3;

/// Integrates `f` over `[a, ∞)`.
///
/// The half line is mapped onto `[0, 1)` by `t = a / (1 - x)` and the image
/// is cut at `x = 1 - 2^{-j}`, so segment `j` covers `t ∈ [a 2^j, a 2^{j+1}]`.
/// Each segment is integrated adaptively in a local coordinate that keeps
/// `1 - x` exact. After every doubling of the horizon the segment
/// contributions are inspected:
///
/// * contributions that vanish faster than geometrically end the loop with
///   `converged = true`;
/// * a stable contribution ratio `q < 1` is extrapolated geometrically and
///   accepted once two successive extrapolations agree to tolerance;
/// * a stable ratio `q >= 1` (the integrand does not decay fast enough) is a
///   divergence verdict, `converged = false`.
///
/// If no verdict is reached within the segment budget the result is
/// reported as not converged.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: F, a: f64, cfg: &QuadratureConfig) -> Result<TailResult> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidInterval { a, b: f64::INFINITY });
    }
    let seg_cfg = QuadratureConfig {
        abs_tol: cfg.abs_tol * 0.125,
        ..*cfg
    };

    let mut contributions: Vec<f64> = Vec::new();
    let mut sum = 0.0;
    let mut previous_extrapolation: Option<f64> = None;
    let mut horizon = a;

    for j in 0..MAX_SEGMENTS {
        let lo = a * 2f64.powi(j);
        let d = integrate(
            |u| {
                let w = 1.0 - 0.5 * u;
                f(lo / w) * 0.5 * lo / (w * w)
            },
            0.0,
            1.0,
            &seg_cfg,
        )?;
        horizon = 2.0 * lo;
        sum += d;
        contributions.push(d);
        let tol = cfg.target(sum);
        let n = contributions.len();

        // Contributions have died out faster than any geometric rate.
        let cut = cfg.tail_cut_threshold.max(0.01 * tol);
        if n >= 3 {
            let last3 = &contributions[n - 3..];
            let small = last3.iter().all(|c| c.abs() <= cut);
            let shrinking = last3[2] == 0.0 || last3[2].abs() <= 0.9 * last3[1].abs();
            if small && shrinking {
                return Ok(TailResult {
                    value: sum,
                    converged: true,
                    horizon,
                });
            }
        }

        if n >= 5 {
            let c = &contributions[n - 4..];
            let ratios: Vec<f64> = (1..4).map(|k| c[k] / c[k - 1]).collect();
            let usable = ratios.iter().all(|q| q.is_finite() && *q > 0.0);
            if usable {
                let q = ratios[2];
                let stable = (ratios[2] - ratios[1]).abs() <= RATIO_STABILITY * q
                    && (ratios[1] - ratios[0]).abs() <= RATIO_STABILITY * q;
                if stable && q >= 1.0 {
                    return Ok(TailResult {
                        value: sum,
                        converged: false,
                        horizon,
                    });
                }
                if q < 1.0 {
                    let extrapolated = sum + d * q / (1.0 - q);
                    if let Some(prev) = previous_extrapolation {
                        if (extrapolated - prev).abs() <= cfg.target(extrapolated) {
                            return Ok(TailResult {
                                value: extrapolated,
                                converged: true,
                                horizon,
                            });
                        }
                    }
                    previous_extrapolation = Some(extrapolated);
                } else {
                    previous_extrapolation = None;
                }
            } else {
                previous_extrapolation = None;
            }
        }
    }

    Ok(TailResult {
        value: previous_extrapolation.unwrap_or(sum),
        converged: false,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn inverse_square_tail() {
        let r = integrate_tail(|t| t.powi(-2), 1.0, &cfg()).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn harmonic_tail_diverges() {
        let r = integrate_tail(|t| 1.0 / t, 1.0, &cfg()).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn slowly_growing_integrand_diverges() {
        let r = integrate_tail(|t: f64| t.sqrt(), 2.0, &cfg()).unwrap();
        assert!(!r.converged);
        let r = integrate_tail(|t: f64| t.powf(-0.5), 2.0, &cfg()).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn inverse_sinh_squared_tail() {
        // Truncated Riemann sum as an independent check of coth(1) - 1.
        let f = |t: f64| t.sinh().powi(-2);
        let h = 1e-5;
        let oracle: f64 = (0..4_000_000).map(|i| f(1.0 + (i as f64 + 0.5) * h)).sum::<f64>() * h;
        let closed = 1.0 / 1f64.tanh() - 1.0;
        assert!((oracle - closed).abs() < 1e-8);

        let r = integrate_tail(f, 1.0, &cfg()).unwrap();
        assert!(r.converged);
        assert!((r.value - closed).abs() < 1e-10);
        assert!((r.value - 0.313_035).abs() < 1e-6);
    }

    #[test]
    fn slow_power_tail_is_extrapolated() {
        let r = integrate_tail(|t: f64| t.powf(-1.5), 1.0, &cfg()).unwrap();
        assert!(r.converged);
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
        let r = integrate_tail(|t: f64| (1.0 + t).powf(-1.5), 1.0, &cfg()).unwrap();
        assert!(r.converged);
        assert!((r.value - 2.0 / 2f64.sqrt()).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn vanishing_integrand() {
        let r = integrate_tail(|_| 0.0, 3.0, &cfg()).unwrap();
        assert!(r.converged);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn anchor_must_be_positive() {
        assert!(integrate_tail(|t| t, 0.0, &cfg()).is_err());
    }
}
