use super::ModelManifold;
use crate::error::{Error, Result};
use crate::numerics::{try_integrate, QuadratureConfig};

pub const DEFAULT_BASE_A: f64 = 1.0;
/// R = r/4 inside the rate function.
pub const DEFAULT_ANNULUS_RATIO: f64 = 0.25;

/// Cumulative table of the rate function
/// `ω(r) = ∫_a^r √(Q_{s/4}(s)) ds`.
///
/// On a model manifold the minimising geodesic from the pole is the radial
/// ray, so the path integral reduces to this one-dimensional integral. The
/// table stores ω at unit steps from the anchor; values between nodes are
/// completed by a quadrature from the nearest node below.
#[derive(Debug, Clone)]
pub struct OmegaTable {
    manifold: ModelManifold,
    base_a: f64,
    annulus_ratio: f64,
    cfg: QuadratureConfig,
    grid: Vec<f64>,
    cumulative: Vec<f64>,
    integrand_cache: Vec<f64>,
}

impl OmegaTable {
    /// Builds the table on `[base_a, r_max]` with the default anchor and
    /// annulus ratio.
    pub fn new(manifold: &ModelManifold, r_max: f64, cfg: &QuadratureConfig) -> Result<Self> {
        Self::with_anchor(manifold, DEFAULT_BASE_A, DEFAULT_ANNULUS_RATIO, r_max, cfg)
    }

    pub fn with_anchor(
        manifold: &ModelManifold,
        base_a: f64,
        annulus_ratio: f64,
        r_max: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        if !(base_a > 0.0 && base_a.is_finite()) {
            return Err(Error::InvalidConfig(format!("rate-function anchor must be positive, got {base_a}")));
        }
        if !(annulus_ratio > 0.0 && annulus_ratio < 1.0) {
            return Err(Error::InvalidConfig(format!("annulus ratio must lie in (0, 1), got {annulus_ratio}")));
        }
        let steps = ((r_max - base_a).max(0.0)).ceil() as usize;
        let mut table = Self {
            manifold: manifold.clone(),
            base_a,
            annulus_ratio,
            cfg: *cfg,
            grid: Vec::with_capacity(steps + 1),
            cumulative: Vec::with_capacity(steps + 1),
            integrand_cache: Vec::with_capacity(steps + 1),
        };
        let mut total = 0.0;
        for i in 0..=steps {
            let r = base_a + i as f64;
            if i > 0 {
                total += table.segment(r - 1.0, r)?;
            }
            table.grid.push(r);
            table.cumulative.push(total);
            table.integrand_cache.push(table.integrand(r)?);
        }
        Ok(table)
    }

    pub fn manifold(&self) -> &ModelManifold {
        &self.manifold
    }

    pub fn base_a(&self) -> f64 {
        self.base_a
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// √(Q_{s/4}(s)) at the grid nodes.
    pub fn integrand_cache(&self) -> &[f64] {
        &self.integrand_cache
    }

    /// √(Q_{cs}(s)) with c the annulus ratio.
    pub fn integrand(&self, s: f64) -> Result<f64> {
        Ok(self.manifold.q_of(s, self.annulus_ratio * s)?.sqrt())
    }

    fn segment(&self, lo: f64, hi: f64) -> Result<f64> {
        try_integrate(|s| self.integrand(s), lo, hi, &self.cfg)
    }

    /// ω(r) for `r >= base_a`.
    pub fn omega(&self, r: f64) -> Result<f64> {
        if !(r >= self.base_a) {
            return Err(Error::BelowAnchor {
                radius: r,
                anchor: self.base_a,
            });
        }
        let i = ((r - self.base_a).floor() as usize).min(self.grid.len() - 1);
        let node = self.grid[i];
        if r == node {
            return Ok(self.cumulative[i]);
        }
        Ok(self.cumulative[i] + self.segment(node, r)?)
    }

    /// ω(m+1) − ω(m).
    pub fn omega_increment(&self, m: f64) -> Result<f64> {
        if !(m >= self.base_a) {
            return Err(Error::BelowAnchor {
                radius: m,
                anchor: self.base_a,
            });
        }
        let offset = m - self.base_a;
        if offset.fract() == 0.0 && (offset as usize) + 1 < self.grid.len() {
            let i = offset as usize;
            return Ok(self.cumulative[i + 1] - self.cumulative[i]);
        }
        self.segment(m, m + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Warping;

    #[test]
    fn flat_rate_function_is_logarithmic() {
        let e = ModelManifold::euclidean(3).unwrap();
        let t = OmegaTable::new(&e, 200.0, &QuadratureConfig::default()).unwrap();
        let c = 4.0 * 2f64.sqrt();
        assert_eq!(t.omega(1.0).unwrap(), 0.0);
        assert!((t.omega(2.0).unwrap() - c * 2f64.ln()).abs() < 1e-9);
        assert!((t.omega(7.25).unwrap() - c * 7.25f64.ln()).abs() < 1e-9);
        assert!((t.omega(250.0).unwrap() - c * 250f64.ln()).abs() < 1e-8);
        let inc = t.omega_increment(100.0).unwrap();
        assert!((inc - c * 0.01f64.ln_1p()).abs() < 1e-10);
        assert!((inc - 0.056_29).abs() < 1e-5);
    }

    #[test]
    fn hyperbolic_rate_is_asymptotically_linear() {
        let h = ModelManifold::hyperbolic(3).unwrap();
        let t = OmegaTable::new(&h, 120.0, &QuadratureConfig::default()).unwrap();
        let d = t.omega(100.0).unwrap() - t.omega(50.0).unwrap();
        assert!((49.0..=51.0).contains(&d), "{d}");
        assert!((t.omega_increment(110.0).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn below_anchor_rejected() {
        let m = ModelManifold::new(3, Warping::power_law(2.0).unwrap()).unwrap();
        let t = OmegaTable::new(&m, 8.0, &QuadratureConfig::default()).unwrap();
        assert!(matches!(t.omega(0.5), Err(Error::BelowAnchor { .. })));
        assert!(t.cumulative().windows(2).all(|w| w[1] >= w[0]));
    }
}
