//! Rotationally symmetric model manifolds `(ℝⁿ, dr² + φ(r)² dθ²)`, their
//! radial curvature, the annulus quantities K_R, I_R, Q_R and the rate
//! function ω built from them.

mod omega;
mod warp;

pub use omega::{OmegaTable, DEFAULT_ANNULUS_RATIO, DEFAULT_BASE_A};
pub use warp::{Knot, LocalWarp, Warping, WarpingKind, DEFAULT_SPLICE};

use crate::error::{Error, Result};
use crate::numerics::{sup_on, try_integrate, QuadratureConfig, SupConfig};

/// Curvature suprema below this are treated as zero in I_R.
pub const KAPPA_TINY: f64 = 1e-14;

/// Area of the unit sphere 𝕊^{n-1} ⊂ ℝⁿ, 2π^{n/2} / Γ(n/2).
pub fn unit_sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    // Γ(n/2) by the half-integer recurrence.
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x + 0.5 < 0.5 * n as f64 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(0.5 * n as f64) / gamma
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelManifold {
    dim: usize,
    warp: Warping,
    sphere_area: f64,
}

impl ModelManifold {
    pub fn new(dim: usize, warp: Warping) -> Result<Self> {
        if dim < 3 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self {
            dim,
            warp,
            sphere_area: unit_sphere_area(dim),
        })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(dim, Warping::euclidean())
    }

    pub fn hyperbolic(dim: usize) -> Result<Self> {
        Self::new(dim, Warping::hyperbolic())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn warp(&self) -> &Warping {
        &self.warp
    }

    /// ω_{n-1}.
    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }

    /// (φ, φ', φ'') at `r`.
    pub fn warp_eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        self.warp.eval(r)
    }

    /// Ric(∂r, ∂r) = -(n-1) φ''/φ.
    pub fn ricci_radial(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::NegativeRadius(r));
        }
        Ok(-((self.dim - 1) as f64) * self.warp.local(r).curv)
    }

    /// K_R(r): supremum of φ''/φ over the annulus `[r - R, r + R]`,
    /// clamped below at zero.
    pub fn k_sup(&self, r: f64, half_width: f64) -> Result<f64> {
        if !(half_width > 0.0 && r > half_width) {
            return Err(Error::InvalidAnnulus {
                radius: r,
                half_width,
            });
        }
        let cfg = SupConfig::default();
        let s = sup_on(|t| self.warp.local(t).curv, r - half_width, r + half_width, &cfg)?;
        Ok(s.value.max(0.0))
    }

    /// I_R(r) = √K coth(√K R / 2), or 2/R when K vanishes.
    pub fn i_of(&self, r: f64, half_width: f64) -> Result<f64> {
        let k = self.k_sup(r, half_width)?;
        Ok(i_from_k(k, half_width))
    }

    /// Q_R(r) = max{K_R, I_R / R, 1 / R²}.
    pub fn q_of(&self, r: f64, half_width: f64) -> Result<f64> {
        let k = self.k_sup(r, half_width)?;
        Ok(q_from_k(k, half_width))
    }

    /// Vol(B_R) = ω_{n-1} ∫_0^R φ^{n-1}.
    pub fn volume_ball(&self, radius: f64, cfg: &QuadratureConfig) -> Result<f64> {
        if radius < 0.0 || radius.is_nan() {
            return Err(Error::NegativeRadius(radius));
        }
        let p = (self.dim - 1) as i32;
        let integral = try_integrate(|t| self.warp.eval(t).map(|v| v.0.powi(p)), 0.0, radius, cfg)?;
        Ok(self.sphere_area * integral)
    }

    /// Samples φ''/φ on a log grid over `(0, r_max]` and reports the first
    /// radius where it is negative.
    pub fn check_cartan_hadamard(&self, r_max: f64) -> Result<()> {
        let n = 4096;
        let lo: f64 = 1e-3;
        let ratio = (r_max / lo).ln() / n as f64;
        for i in 0..=n {
            let r = lo * (ratio * i as f64).exp();
            if self.warp.local(r).curv < -1e-12 {
                return Err(Error::NotCartanHadamard(r));
            }
        }
        Ok(())
    }
}

pub(crate) fn i_from_k(k: f64, half_width: f64) -> f64 {
    if k < KAPPA_TINY {
        2.0 / half_width
    } else {
        let s = k.sqrt();
        s / (s * half_width / 2.0).tanh()
    }
}

pub(crate) fn q_from_k(k: f64, half_width: f64) -> f64 {
    let i = i_from_k(k, half_width);
    k.max(i / half_width).max(1.0 / (half_width * half_width))
}
