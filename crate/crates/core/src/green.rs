//! The minimal positive Green's function of a model manifold with pole at
//! the origin, the two Poincaré weight families built on it, and numerical
//! checks of the Green's-function estimates.
//!
//! The kernel is stored through the scale-free quantity
//! `h(r) = φ(r)^{n-1} g(r)`, `g(r) = ∫_r^∞ φ^{1-n}`, which stays of moderate
//! size even where `g` itself underflows. With `G = g / ω_{n-1}`:
//!
//! * `ln G = (1-n) ln φ + ln h - ln ω_{n-1}`
//! * `G' = -φ^{1-n} / ω_{n-1}`, so `|G'| / G = 1 / h`
//! * `h' = (n-1)(φ'/φ) h - 1`

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ModelManifold, OmegaTable, Warping, DEFAULT_ANNULUS_RATIO};
use crate::numerics::{integrate, integrate_tail, try_integrate, QuadratureConfig, TailResult};

const CACHE_LO: f64 = 1e-6;
const CACHE_HI: f64 = 1e6;
const NODES_PER_DECADE: usize = 400;
const LEVEL_RADIUS_TOL: f64 = 1e-12;
// Above this value of r·(n-1)(φ'/φ) the cached slope h' = (n-1)(φ'/φ)h − 1
// cancels too strongly for interpolation; h is integrated directly.
const DIRECT_STIFFNESS: f64 = 1e8;

fn cache_cfg() -> QuadratureConfig {
    QuadratureConfig::with_tolerances(1e-300, 1e-12)
}

// ∫_a^b (φ(a)/φ(t))^{n-1} dt, integrated in the offset x = t − a. The
// integrand can fall off on a scale far below b − a, so the offsets are cut
// at s·2^k with s the decay length.
fn local_h(warp: &Warping, n1: f64, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let f = |x: f64| (-n1 * warp.log_ratio(a, x)).exp();
    let width = b - a;
    let slope = n1 * warp.local(a).dlog;
    let s = if slope > 0.0 { 1.0 / slope } else { f64::INFINITY };
    if s >= 0.25 * width {
        return integrate(f, 0.0, width, cfg);
    }
    let (mut lo, mut hi, mut sum) = (0.0, s, 0.0);
    while lo < width {
        hi = hi.min(width);
        if f(lo) < 1e-20 * sum {
            break;
        }
        sum += integrate(f, lo, hi, cfg)?;
        lo = hi;
        hi *= 2.0;
    }
    Ok(sum)
}

/// Minimal positive Green's function `G(p, ·)` of a model manifold.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    manifold: ModelManifold,
    parabolic: bool,
    nodes: Vec<f64>,
    h: Vec<f64>,
    dh: Vec<f64>,
}

impl GreenKernel {
    /// Classifies the manifold and, when it is non-parabolic, caches `h` on
    /// a log grid over `[1e-6, 1e6]`.
    pub fn build(manifold: &ModelManifold) -> Result<Self> {
        let n1 = (manifold.dim() - 1) as f64;
        let warp = manifold.warp();
        let probe = integrate_tail(|t| (-n1 * warp.log_ratio(1.0, t - 1.0)).exp(), 1.0, &QuadratureConfig::default())?;
        let mut kernel = Self {
            manifold: manifold.clone(),
            parabolic: !probe.converged,
            nodes: Vec::new(),
            h: Vec::new(),
            dh: Vec::new(),
        };
        if kernel.parabolic {
            return Ok(kernel);
        }

        let decades = (CACHE_HI / CACHE_LO).log10();
        let count = (decades * NODES_PER_DECADE as f64).round() as usize;
        let step = (CACHE_HI / CACHE_LO).ln() / count as f64;
        let mut nodes: Vec<f64> = (0..=count).map(|i| CACHE_LO * (step * i as f64).exp()).collect();
        nodes[count] = CACHE_HI;
        nodes.extend(warp.knots().into_iter().filter(|k| *k > CACHE_LO && *k < CACHE_HI));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());

        let cfg = cache_cfg();
        let last = *nodes.last().unwrap();
        let mut h = vec![0.0; nodes.len()];
        h[nodes.len() - 1] = kernel.tail_h(last, &cfg)?;
        for i in (0..nodes.len() - 1).rev() {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let local = local_h(warp, n1, a, b, &cfg)?;
            h[i] = local + (-n1 * warp.log_ratio(a, b - a)).exp() * h[i + 1];
        }
        let dh = nodes
            .iter()
            .zip(&h)
            .map(|(&r, &v)| n1 * warp.local(r).dlog * v - 1.0)
            .collect();
        kernel.nodes = nodes;
        kernel.h = h;
        kernel.dh = dh;
        Ok(kernel)
    }

    // h(r) by a direct improper integral.
    fn tail_h(&self, r: f64, cfg: &QuadratureConfig) -> Result<f64> {
        let n1 = (self.manifold.dim() - 1) as f64;
        let warp = self.manifold.warp();
        let near = local_h(warp, n1, r, 2.0 * r, cfg)?;
        let factor = (-n1 * warp.log_ratio(r, r)).exp();
        if factor < 1e-20 * near {
            return Ok(near);
        }
        let t = integrate_tail(|t| (-n1 * warp.log_ratio(2.0 * r, t - 2.0 * r)).exp(), 2.0 * r, cfg)?;
        if !t.converged {
            return Err(Error::ParabolicManifold);
        }
        Ok(near + factor * t.value)
    }

    pub fn manifold(&self) -> &ModelManifold {
        &self.manifold
    }

    pub fn is_parabolic(&self) -> bool {
        self.parabolic
    }

    /// 1/ω_{n-1}.
    pub fn normalization(&self) -> f64 {
        1.0 / self.manifold.sphere_area()
    }

    fn require_nonparabolic(&self) -> Result<()> {
        if self.parabolic {
            Err(Error::ParabolicManifold)
        } else {
            Ok(())
        }
    }

    /// `h(r) = φ(r)^{n-1} ∫_r^∞ φ^{1-n}`.
    pub fn scaled_tail(&self, r: f64) -> Result<f64> {
        self.require_nonparabolic()?;
        if !(r > 0.0) {
            return Err(Error::NegativeRadius(r));
        }
        let (first, last) = (self.nodes[0], *self.nodes.last().unwrap());
        let n1 = (self.manifold.dim() - 1) as f64;
        if r > last || r * n1 * self.manifold.warp().local(r).dlog > DIRECT_STIFFNESS {
            return self.tail_h(r, &cache_cfg());
        }
        if r < first {
            let warp = self.manifold.warp();
            let local = local_h(warp, n1, r, first, &cache_cfg())?;
            return Ok(local + (-n1 * warp.log_ratio(r, first - r)).exp() * self.h[0]);
        }
        let i = self.nodes.partition_point(|&x| x <= r).clamp(1, self.nodes.len() - 1) - 1;
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let w = b - a;
        let t = (r - a) / w;
        let (t2, t3) = (t * t, t * t * t);
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * self.h[i]
            + (t3 - 2.0 * t2 + t) * w * self.dh[i]
            + (-2.0 * t3 + 3.0 * t2) * self.h[i + 1]
            + (t3 - t2) * w * self.dh[i + 1])
    }

    /// ln g(r).
    pub fn log_tail(&self, r: f64) -> Result<f64> {
        let h = self.scaled_tail(r)?;
        let n1 = (self.manifold.dim() - 1) as f64;
        Ok(h.ln() - n1 * self.manifold.warp().local(r).log_phi)
    }

    /// Unnormalised tail `g(r) = ∫_r^∞ φ^{1-n}`.
    pub fn tail(&self, r: f64) -> Result<f64> {
        Ok(self.log_tail(r)?.exp())
    }

    /// ln G(r).
    pub fn log_green(&self, r: f64) -> Result<f64> {
        Ok(self.log_tail(r)? - self.manifold.sphere_area().ln())
    }

    /// G(r) = g(r) / ω_{n-1}.
    pub fn green(&self, r: f64) -> Result<f64> {
        Ok(self.log_green(r)?.exp())
    }

    /// G'(r) = -φ(r)^{1-n} / ω_{n-1}.
    pub fn green_derivative(&self, r: f64) -> Result<f64> {
        self.require_nonparabolic()?;
        if !(r > 0.0) {
            return Err(Error::NegativeRadius(r));
        }
        let n1 = (self.manifold.dim() - 1) as f64;
        Ok(-(-n1 * self.manifold.warp().local(r).log_phi).exp() / self.manifold.sphere_area())
    }

    /// Smallest and largest radius the level inversion covers.
    pub fn level_range(&self) -> (f64, f64) {
        match (self.nodes.first(), self.nodes.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (f64::NAN, f64::NAN),
        }
    }

    /// Radius of the level set `{G = s}` by bisection in log r.
    pub fn level_radius(&self, s: f64) -> Result<f64> {
        self.require_nonparabolic()?;
        let (lo_r, hi_r) = self.level_range();
        let max = self.green(lo_r)?;
        let target = s.ln();
        if !(s > 0.0) || s > max || target < self.log_green(hi_r)? {
            return Err(Error::LevelOutOfRange { level: s, max });
        }
        let (mut lo, mut hi) = (lo_r.ln(), hi_r.ln());
        while hi - lo > LEVEL_RADIUS_TOL {
            let mid = 0.5 * (lo + hi);
            if self.log_green(mid.exp())? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }

    /// Flux of ∇G through the level set `{G = s}`: `ω_{n-1} φ^{n-1} |G'|`
    /// at its radius. Equal to 1 analytically.
    pub fn flux_identity_check(&self, s: f64) -> Result<f64> {
        let r = self.level_radius(s)?;
        let n1 = (self.manifold.dim() - 1) as f64;
        let log_area = self.manifold.sphere_area().ln() + n1 * self.manifold.warp().local(r).log_phi;
        let log_grad = self.green_derivative(r)?.abs().ln();
        Ok((log_area + log_grad).exp())
    }

    /// `(∫_{a<G<b} |∇G|²/G, ln(b/a))` for levels `0 < a < b`.
    pub fn log_level_identity_check(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        if !(a < b) {
            return Err(Error::LevelOutOfRange { level: a, max: b });
        }
        let r_a = self.level_radius(a)?;
        let r_b = self.level_radius(b)?;
        // ω φ^{n-1} G'^2 / G reduces to 1/h.
        let lhs = try_integrate(|r| self.scaled_tail(r).map(|h| 1.0 / h), r_b, r_a, &QuadratureConfig::with_tolerances(1e-14, 1e-12))?;
        let rhs = (b / a).ln();
        Ok((lhs, rhs))
    }

    /// `|G'| / (√(Q_{r/4}(r)) G)`, bounded by a dimensional constant.
    pub fn gradient_bound_ratio(&self, r: f64) -> Result<f64> {
        let h = self.scaled_tail(r)?;
        let q = self.manifold.q_of(r, DEFAULT_ANNULUS_RATIO * r)?;
        Ok(1.0 / (h * q.sqrt()))
    }

    /// Empirical constants of the two-sided bound
    /// `A^{-1} e^{-Bω} ≤ G ≤ A e^{Bω}` over the sample radii.
    pub fn sandwich_fit(&self, table: &OmegaTable, r_samples: &[f64]) -> Result<SandwichFit> {
        self.require_nonparabolic()?;
        let a = table.base_a();
        let log_ga = self.log_green(a)?;
        let mut b_fit: f64 = 0.0;
        let mut used = 0;
        for &r in r_samples {
            let w = table.omega(r)?;
            if w <= 0.0 {
                continue;
            }
            b_fit = b_fit.max((self.log_green(r)? - log_ga).abs() / w);
            used += 1;
        }
        let n = self.manifold.dim() as f64;
        Ok(SandwichFit {
            b_fit,
            a_fit: log_ga.abs().exp(),
            b_theory: 2.0 * n * (n - 1.0),
            samples: used,
        })
    }

    /// `∫_{r>R} ρ G² dV` as an improper radial integral.
    pub fn weighted_tail_energy(&self, rho: &WeightFunction, radius: f64) -> Result<TailResult> {
        self.require_nonparabolic()?;
        let n1 = (self.manifold.dim() - 1) as f64;
        let area = self.manifold.sphere_area();
        let warp = self.manifold.warp();
        let start = radius.max(rho.valid_from());
        crate::numerics::try_integrate_tail(
            |r| {
                let h = self.scaled_tail(r)?;
                let w = rho.eval(r)?;
                Ok(w * h * h * (-n1 * warp.local(r).log_phi).exp() / area)
            },
            start,
            &QuadratureConfig::default(),
        )
    }
}

/// Constants fitted by [`GreenKernel::sandwich_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichFit {
    pub b_fit: f64,
    pub a_fit: f64,
    /// 2n(n-1).
    pub b_theory: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// ρ = |∇G|² / (4G²).
    Green,
    /// ρ = C' r^γ for γ ≥ -2, C' r^{-2} below.
    Hardy { gamma: f64, c_prime: f64 },
}

/// Radial Poincaré weight ρ, valid on `[valid_from, ∞)`.
#[derive(Debug, Clone)]
pub struct WeightFunction {
    kind: WeightKind,
    valid_from: f64,
    kernel: Option<Arc<GreenKernel>>,
}

impl WeightFunction {
    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn valid_from(&self) -> f64 {
        self.valid_from
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        match self.kind {
            WeightKind::Green => {
                let h = self.kernel.as_ref().ok_or(Error::ParabolicManifold)?.scaled_tail(r)?;
                Ok(0.25 / (h * h))
            }
            WeightKind::Hardy { gamma, c_prime } => {
                if !(r > 0.0) {
                    return Err(Error::NegativeRadius(r));
                }
                Ok(c_prime * r.powf(gamma.max(-2.0)))
            }
        }
    }

    /// The same weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        match self.kind {
            WeightKind::Hardy { gamma, c_prime } => Ok(Self {
                kind: WeightKind::Hardy {
                    gamma,
                    c_prime: c * c_prime,
                },
                ..self.clone()
            }),
            WeightKind::Green => Err(Error::InvalidConfig("only Hardy weights can be rescaled".into())),
        }
    }
}

/// ρ = |∇G|²/(4G²) = 1/(4h²).
pub fn green_weight(kernel: Arc<GreenKernel>) -> Result<WeightFunction> {
    kernel.require_nonparabolic()?;
    let (lo, _) = kernel.level_range();
    Ok(WeightFunction {
        kind: WeightKind::Green,
        valid_from: lo,
        kernel: Some(kernel),
    })
}

/// Piecewise power weight of a Cartan-Hadamard model.
pub fn hardy_weight(manifold: &ModelManifold, gamma: f64, c_prime: f64) -> Result<WeightFunction> {
    if !(c_prime > 0.0 && c_prime.is_finite() && gamma.is_finite()) {
        return Err(Error::InvalidConfig(format!("Hardy weight needs C' > 0 and finite gamma, got C' = {c_prime}, gamma = {gamma}")));
    }
    manifold.check_cartan_hadamard(1e3)?;
    Ok(WeightFunction {
        kind: WeightKind::Hardy { gamma, c_prime },
        valid_from: 1.0,
        kernel: None,
    })
}

/// Worst Rayleigh-type ratio found by [`poincare_spot_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareCheck {
    pub worst_ratio: f64,
    /// Ratio of the truncated `r^{-(n-2)/2}` profile.
    pub near_optimizer_ratio: f64,
    pub worst_random_ratio: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Radial test function: C¹ cubic Hermite through `(r, v, v')` knots.
#[derive(Debug, Clone)]
struct Bump {
    knots: Vec<(f64, f64, f64)>,
}

impl Bump {
    fn cell(&self, i: usize, r: f64) -> (f64, f64) {
        let (a, va, sa) = self.knots[i];
        let (b, vb, sb) = self.knots[i + 1];
        let w = b - a;
        let t = (r - a) / w;
        let (t2, t3) = (t * t, t * t * t);
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * va + (t3 - 2.0 * t2 + t) * w * sa + (-2.0 * t3 + 3.0 * t2) * vb + (t3 - t2) * w * sb;
        let dv = ((6.0 * t2 - 6.0 * t) * va
            + (3.0 * t2 - 4.0 * t + 1.0) * w * sa
            + (-6.0 * t2 + 6.0 * t) * vb
            + (3.0 * t2 - 2.0 * t) * w * sb)
            / w;
        (v, dv)
    }
}

fn random_bump(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Bump {
    let interior = rng.gen_range(4..=8);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut radii: Vec<f64> = (0..interior).map(|_| rng.gen_range(llo..lhi).exp()).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let mut knots = vec![(lo, 0.0, 0.0)];
    for r in radii {
        let v = rng.gen_range(-1.0..1.0);
        let s = rng.gen_range(-1.0..1.0) / r;
        knots.push((r, v, s));
    }
    knots.push((hi, 0.0, 0.0));
    Bump { knots }
}

// r^{-(n-2)/2} with C¹ cutoffs on [lo, 2lo] and [hi/2, hi].
fn near_optimizer(n: usize, lo: f64, hi: f64) -> impl Fn(f64) -> (f64, f64) {
    let p = 0.5 * (n as f64 - 2.0);
    let ln2 = std::f64::consts::LN_2;
    move |r: f64| {
        let base = r.powf(-p);
        let dbase = -p * base / r;
        let (chi, dchi) = if r < 2.0 * lo {
            let x = (r / lo).ln() / ln2;
            (x * x * (3.0 - 2.0 * x), 6.0 * x * (1.0 - x) / (ln2 * r))
        } else if r > 0.5 * hi {
            let x = (hi / r).ln() / ln2;
            (x * x * (3.0 - 2.0 * x), -6.0 * x * (1.0 - x) / (ln2 * r))
        } else {
            (1.0, 0.0)
        };
        (base * chi, dbase * chi + base * dchi)
    }
}

/// Checks `∫ρv² ≤ ∫|∇v|²` on `trials` seeded random radial bumps supported
/// in `[lo, hi]`, plus one truncated near-optimizer. Returns the largest
/// ratio `∫ρv² dV / ∫|v'|² dV` seen.
pub fn poincare_spot_check(
    manifold: &ModelManifold,
    rho: &WeightFunction,
    trials: usize,
    support: (f64, f64),
    seed: u64,
) -> Result<PoincareCheck> {
    let (lo, hi) = support;
    if !(lo >= rho.valid_from() && lo > 0.0 && hi > 4.0 * lo && hi.is_finite()) {
        return Err(Error::InvalidInterval { a: lo, b: hi });
    }
    let n1 = (manifold.dim() - 1) as f64;
    let warp = manifold.warp();
    let log_ref = warp.local(hi).log_phi;
    let cfg = QuadratureConfig::with_tolerances(1e-14, 1e-11);
    let volume = |r: f64| (n1 * (warp.local(r).log_phi - log_ref)).exp();

    let ratio = |profile: &dyn Fn(f64) -> (f64, f64), cuts: &[f64]| -> Result<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for w in cuts.windows(2) {
            num += try_integrate(
                |r| {
                    let v = profile(r).0;
                    Ok(rho.eval(r)? * v * v * volume(r))
                },
                w[0],
                w[1],
                &cfg,
            )?;
            den += integrate(
                |r| {
                    let dv = profile(r).1;
                    dv * dv * volume(r)
                },
                w[0],
                w[1],
                &cfg,
            )?;
        }
        if !(den > 0.0) {
            return Err(Error::DegenerateTestFunction);
        }
        Ok(num / den)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_random = f64::NEG_INFINITY;
    for _ in 0..trials {
        let bump = random_bump(&mut rng, lo, hi);
        let cuts: Vec<f64> = bump.knots.iter().map(|k| k.0).collect();
        let profile = |r: f64| {
            let i = cuts.partition_point(|&x| x <= r).clamp(1, cuts.len() - 1) - 1;
            bump.cell(i, r)
        };
        worst_random = worst_random.max(ratio(&profile, &cuts)?);
    }

    let opt = near_optimizer(manifold.dim(), lo, hi);
    let near = ratio(&opt, &[lo, 2.0 * lo, 0.5 * hi, hi])?;
    Ok(PoincareCheck {
        worst_ratio: worst_random.max(near),
        near_optimizer_ratio: near,
        worst_random_ratio: worst_random,
        trials,
        seed,
    })
}
