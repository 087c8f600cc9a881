use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances and limits shared by the quadrature routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of bisections applied to any one subinterval.
    pub max_depth: u32,
    /// Segment contributions below this magnitude end a semi-infinite
    /// integration early (0 disables the absolute cut).
    pub tail_cut_threshold: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_depth: 60,
            tail_cut_threshold: 0.0,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.max_depth < 8 {
            return Err(Error::InvalidConfig(format!("max_depth must be >= 8, got {}", self.max_depth)));
        }
        if !(self.tail_cut_threshold >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tail_cut_threshold must be >= 0, got {}",
                self.tail_cut_threshold
            )));
        }
        Ok(())
    }

    pub(crate) fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Value of a finite integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

// 15-point Kronrod abscissae and weights, with the embedded 7-point Gauss rule,
// at their published precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_SEGMENTS: usize = 200_000;

struct Rule {
    value: f64,
    error: f64,
    resabs: f64,
}

fn finite_at(x: f64, y: f64) -> Result<f64> {
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite { x })
    }
}

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Rule> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = finite_at(centre, f(centre))?;
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for (j, wg) in WG.iter().take(3).enumerate() {
        let k = 2 * j + 1;
        let dx = half * XGK[k];
        let f1 = finite_at(centre - dx, f(centre - dx))?;
        let f2 = finite_at(centre + dx, f(centre + dx))?;
        fv1[k] = f1;
        fv2[k] = f2;
        resg += wg * (f1 + f2);
        resk += WGK[k] * (f1 + f2);
        resabs += WGK[k] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let k = 2 * j;
        let dx = half * XGK[k];
        let f1 = finite_at(centre - dx, f(centre - dx))?;
        let f2 = finite_at(centre + dx, f(centre + dx))?;
        fv1[k] = f1;
        fv2[k] = f2;
        resk += WGK[k] * (f1 + f2);
        resabs += WGK[k] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for k in 0..7 {
        resasc += WGK[k] * ((fv1[k] - mean).abs() + (fv2[k] - mean).abs());
    }

    let width = half.abs();
    let value = resk * half;
    let resabs = resabs * width;
    let resasc = resasc * width;
    let error = rescale_error((resk - resg) * half, resabs, resasc);
    Ok(Rule { value, error, resabs })
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
    depth: u32,
}

impl Segment {
    fn at_roundoff_floor(&self) -> bool {
        self.error <= 50.0 * f64::EPSILON * self.resabs * (1.0 + 1e-9)
    }
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Integrates `f` over `[a, b]` with globally adaptive 7/15-point
/// Gauss-Kronrod bisection.
///
/// The returned value satisfies `|I - ∫f| <= max(abs_tol, rel_tol |I|)`
/// according to the embedded error estimate. Subintervals whose estimate
/// sits at the floating-point floor are accepted as they are.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    integrate_estimate(f, a, b, cfg).map(|e| e.value)
}

pub fn integrate_estimate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }

    let first = gauss_kronrod_15(&f, a, b)?;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: first.value,
        error: first.error,
        resabs: first.resabs,
        depth: 0,
    });
    let mut settled: Vec<Segment> = Vec::new();
    let mut total_value = first.value;
    let mut total_error = first.error;

    loop {
        if total_error <= cfg.target(total_value) {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        if worst.at_roundoff_floor() {
            settled.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        if worst.depth >= cfg.max_depth || !(worst.a < mid && mid < worst.b) || heap.len() + settled.len() >= MAX_SEGMENTS {
            return Err(Error::NonConvergent {
                a,
                b,
                max_depth: cfg.max_depth,
            });
        }
        let left = gauss_kronrod_15(&f, worst.a, mid)?;
        let right = gauss_kronrod_15(&f, mid, worst.b)?;
        evaluations += 30;
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        for (lo, hi, rule) in [(worst.a, mid, left), (mid, worst.b, right)] {
            heap.push(Segment {
                a: lo,
                b: hi,
                value: rule.value,
                error: rule.error,
                resabs: rule.resabs,
                depth: worst.depth + 1,
            });
        }
    }

    // Re-sum in position order so the result does not depend on the
    // accumulated running totals.
    let mut pieces: Vec<Segment> = heap.into_vec();
    pieces.extend(settled);
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = pieces.iter().map(|s| s.value).sum();
    let error = pieces.iter().map(|s| s.error).sum();
    Ok(Estimate {
        value,
        error,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x, 0.0, 1.0, &QuadratureConfig::default()).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_integrand() {
        let v = integrate(|_| 0.0, -3.0, 7.0, &QuadratureConfig::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn inverse_sinh_squared_matches_coth_difference() {
        // Midpoint rule with 10^6 cells as an independent check of the
        // closed form coth(1) - coth(3).
        let f = |x: f64| x.sinh().powi(-2);
        let n = 1_000_000;
        let h = 2.0 / n as f64;
        let midpoint: f64 = (0..n).map(|i| f(1.0 + (i as f64 + 0.5) * h)).sum::<f64>() * h;
        let closed = 1.0 / 1f64.tanh() - 1.0 / 3f64.tanh();
        assert!((midpoint - closed).abs() < 1e-9);
        assert!((closed - 0.308_065).abs() < 1e-6);

        let v = integrate(f, 1.0, 3.0, &QuadratureConfig::default()).unwrap();
        assert!((v - closed).abs() < 1e-10);
    }

    #[test]
    fn kink_is_resolved() {
        let v = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &QuadratureConfig::default()).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-10);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate(|x: f64| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, &QuadratureConfig::default());
        assert!(matches!(err, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn depth_exhaustion_is_non_convergent() {
        let cfg = QuadratureConfig {
            max_depth: 8,
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            ..Default::default()
        };
        let err = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &cfg);
        assert!(matches!(err, Err(Error::NonConvergent { .. })));
    }

    #[test]
    fn reversed_interval_rejected() {
        assert!(matches!(
            integrate(|x| x, 1.0, 0.0, &QuadratureConfig::default()),
            Err(Error::InvalidInterval { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let bad = QuadratureConfig {
            max_depth: 4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
