use serde::Serialize;

use crate::error::{Error, Result};

/// Sampling parameters for [`sup_on`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupConfig {
    pub samples_per_decade: usize,
    /// Right end used when the interval is unbounded.
    pub horizon: f64,
    /// Samples above this magnitude count as an unbounded supremum.
    pub overflow_guard: f64,
    /// Relative bracket width at which golden-section refinement stops.
    pub refine_tol: f64,
}

impl Default for SupConfig {
    fn default() -> Self {
        Self {
            samples_per_decade: 64,
            horizon: 1e4,
            overflow_guard: 1e300,
            refine_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupResult {
    pub value: f64,
    pub argsup: f64,
    /// Samples are nonincreasing beyond `argsup`.
    pub monotone_tail: bool,
    /// Right end of the sampled range.
    pub right_end: f64,
    /// d log|f| / d log x between the last two samples.
    pub end_log_slope: f64,
}

fn sample_points(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    if a == b {
        return vec![a];
    }
    let mut points = Vec::new();
    let lo = if a > 0.0 {
        a
    } else {
        points.push(a);
        1e-6 * b.min(1.0)
    };
    let decades = (b / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(4);
    let ratio = (b / lo).ln() / n as f64;
    points.push(lo);
    for i in 1..n {
        points.push(lo * (ratio * i as f64).exp());
    }
    points.push(b);
    points
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let eval = |x: f64| {
        let y = f(x);
        if y.is_nan() {
            Err(Error::NonFinite { x })
        } else {
            Ok(y)
        }
    };
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    for _ in 0..200 {
        if hi - lo <= tol * (1.0 + lo.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Numerical supremum of `f` over `[a, b]`, or over `[a, ∞)` when `b` is
/// infinite (sampled up to `cfg.horizon`).
///
/// Samples are log-spaced; the best sample is then refined by golden-section
/// search inside its neighbouring sample bracket.
pub fn sup_on<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &SupConfig) -> Result<SupResult> {
    if !(a >= 0.0 && a.is_finite()) || b < a || b.is_nan() {
        return Err(Error::InvalidInterval { a, b });
    }
    let right = if b.is_infinite() {
        if cfg.horizon > a {
            cfg.horizon
        } else {
            10.0 * a.max(1.0)
        }
    } else {
        b
    };
    let xs = sample_points(a, right, cfg.samples_per_decade.max(1));
    let mut ys = Vec::with_capacity(xs.len());
    for &x in &xs {
        let y = f(x);
        if y.is_nan() {
            return Err(Error::NonFinite { x });
        }
        if y.abs() > cfg.overflow_guard || y.is_infinite() {
            return Err(Error::Unbounded { x, value: y });
        }
        ys.push(y);
    }

    let mut best = 0;
    for (i, &y) in ys.iter().enumerate() {
        if y > ys[best] {
            best = i;
        }
    }
    // A maximum at the right end of a still-rising sample run says nothing
    // about the function beyond it.
    let rising_at_end = best == ys.len() - 1 && ys.len() > 1 && ys[best] > ys[best - 1];
    let monotone_tail = !rising_at_end && ys[best..].windows(2).all(|w| w[1] <= w[0]);

    let mut value = ys[best];
    let mut argsup = xs[best];
    if xs.len() > 1 {
        let lo = xs[best.saturating_sub(1)];
        let hi = xs[(best + 1).min(xs.len() - 1)];
        let (x, y) = golden_max(&f, lo, hi, cfg.refine_tol)?;
        if y > value {
            value = y;
            argsup = x;
        }
    }

    let n = xs.len();
    let end_log_slope = if n >= 2 && ys[n - 1] != 0.0 && ys[n - 2] != 0.0 && xs[n - 2] > 0.0 {
        (ys[n - 1].abs() / ys[n - 2].abs()).ln() / (xs[n - 1] / xs[n - 2]).ln()
    } else {
        0.0
    };

    Ok(SupResult {
        value,
        argsup,
        monotone_tail,
        right_end: right,
        end_log_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decreasing_function_peaks_at_left_end() {
        let s = sup_on(|r: f64| (1.0 + r).powi(-3), 2.0, f64::INFINITY, &SupConfig::default()).unwrap();
        assert_eq!(s.argsup, 2.0);
        assert!((s.value - 1.0 / 27.0).abs() < 1e-15);
        assert!(s.monotone_tail);
    }

    #[test]
    fn constant_function() {
        let s = sup_on(|_| 2.5, 3.0, f64::INFINITY, &SupConfig::default()).unwrap();
        assert_eq!(s.value, 2.5);
        assert!(s.monotone_tail);
    }

    #[test]
    fn interior_maximum() {
        // Grid-scan oracle for the critical point of r e^{-r}.
        let f = |r: f64| r * (-r).exp();
        let (mut xb, mut yb) = (0.0, 0.0);
        for i in 0..=200_000 {
            let x = i as f64 * 1e-5;
            if f(x) > yb {
                xb = x;
                yb = f(x);
            }
        }
        assert!((xb - 1.0).abs() < 1e-4);

        let s = sup_on(f, 0.0, f64::INFINITY, &SupConfig::default()).unwrap();
        assert!((s.argsup - 1.0).abs() < 1e-6);
        assert!((s.value - (-1f64).exp()).abs() < 1e-12);
        assert!(s.value >= yb);
    }

    #[test]
    fn overflow_guard_reports_unbounded() {
        let r = sup_on(|x: f64| x.exp(), 1.0, f64::INFINITY, &SupConfig::default());
        assert!(matches!(r, Err(Error::Unbounded { .. })));
    }

    #[test]
    fn growth_at_horizon_is_visible() {
        let s = sup_on(|x: f64| x.sqrt(), 1.0, f64::INFINITY, &SupConfig::default()).unwrap();
        assert!(!s.monotone_tail);
        assert!((s.end_log_slope - 0.5).abs() < 1e-9);
    }
}
