//! Radial solutions of `Δu = f` on model manifolds, where
//! `Δ = ∂²_r + (n-1)(φ'/φ)∂_r` on radial functions.
//!
//! `u'` comes from the integrating factor,
//! `u'(r) = φ(r)^{1-n} ∫_0^r f φ^{n-1}`, advanced cell by cell in log space.
//! `u` is accumulated with the Hermite-Simpson rule, which uses `u''` from
//! the equation itself and is fourth order in the step.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::criterion::{model_threshold, SourceFunction};
use crate::error::{Error, Result};
use crate::geometry::{ModelManifold, Warping};
use crate::green::GreenKernel;
use crate::numerics::{fit_line, integrate, try_integrate, try_integrate_tail, QuadratureConfig, TailResult};

/// Fewest interior nodes [`residual_check`] accepts.
pub const MIN_INTERIOR_NODES: usize = 64;
/// B used for the exponential families in scans.
pub const DEFAULT_B: f64 = 1.0;
/// δ used for the γ = -2 family in scans.
pub const DEFAULT_DELTA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `u(r) → 0` as `r → ∞`.
    VanishAtInfinity,
    /// `u(0) = 0`.
    ZeroAtOrigin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSolution {
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub u_prime: Vec<f64>,
    pub normalization: Normalization,
    /// Largest finite-difference residual, when the grid is fine enough.
    pub residual_max: Option<f64>,
    pub sign_convention: &'static str,
}

fn cell_cfg() -> QuadratureConfig {
    QuadratureConfig::with_tolerances(1e-18, 1e-13)
}

/// Solves `Δu = f` on `[0, r_max]` with uniform step close to `h`.
///
/// Under [`Normalization::VanishAtInfinity`] the value at `r_max` is fixed by
/// the Green representation, which needs `kernel`; a divergent potential
/// integral is a [`Error::TailDivergence`].
pub fn solve_radial(
    manifold: &ModelManifold,
    f: &SourceFunction,
    r_max: f64,
    h: f64,
    normalization: Normalization,
    kernel: Option<&GreenKernel>,
) -> Result<RadialSolution> {
    if !(r_max > 0.0 && r_max.is_finite() && h > 0.0 && h < r_max) {
        return Err(Error::InvalidConfig(format!("solver needs 0 < h < r_max, got h = {h}, r_max = {r_max}")));
    }
    let n1 = (manifold.dim() - 1) as f64;
    let warp = manifold.warp();
    let cells = (r_max / h).round().max(1.0) as usize;
    let step = r_max / cells as f64;
    let grid: Vec<f64> = (0..=cells).map(|i| if i == cells { r_max } else { i as f64 * step }).collect();

    let f0 = f.eval(0.0);
    if !f0.is_finite() {
        return Err(Error::NonFinite { x: 0.0 });
    }
    let mut u_prime = vec![0.0; grid.len()];
    let mut u_second = vec![0.0; grid.len()];
    u_second[0] = f0 / manifold.dim() as f64;
    let cfg = cell_cfg();
    for i in 0..cells {
        let (a, b) = (grid[i], grid[i + 1]);
        let carried = (n1 * warp.log_ratio(b, a - b)).exp() * u_prime[i];
        let fresh = integrate(|t| f.eval(t) * (n1 * warp.log_ratio(b, t - b)).exp(), a, b, &cfg)?;
        u_prime[i + 1] = carried + fresh;
        u_second[i + 1] = f.eval(b) - n1 * warp.local(b).dlog * u_prime[i + 1];
    }

    // Hermite-Simpson with compensated summation.
    let mut u = vec![0.0; grid.len()];
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for i in 0..cells {
        let w = grid[i + 1] - grid[i];
        let inc = 0.5 * w * (u_prime[i] + u_prime[i + 1]) + w * w / 12.0 * (u_second[i] - u_second[i + 1]);
        let y = inc - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
        u[i + 1] = sum;
    }

    if normalization == Normalization::VanishAtInfinity {
        let kernel = kernel.ok_or_else(|| Error::InvalidConfig("vanishing at infinity needs the Green kernel".into()))?;
        if kernel.is_parabolic() {
            return Err(Error::ParabolicManifold);
        }
        let tail = potential_tail(kernel, f, r_max)?;
        if !tail.converged {
            return Err(Error::TailDivergence { horizon: tail.horizon });
        }
        let end = -kernel.scaled_tail(r_max)? * u_prime[cells] - tail.value;
        let shift = end - u[cells];
        for v in &mut u {
            *v += shift;
        }
    }

    let mut sol = RadialSolution {
        grid,
        u,
        u_prime,
        normalization,
        residual_max: None,
        sign_convention: "laplacian(u) = +f",
    };
    if sol.grid.len() >= MIN_INTERIOR_NODES + 3 {
        sol.residual_max = Some(residual_check(manifold, &sol, f)?);
    }
    Ok(sol)
}

// ∫_a^∞ h f with h = φ^{n-1} g.
fn potential_tail(kernel: &GreenKernel, f: &SourceFunction, a: f64) -> Result<TailResult> {
    try_integrate_tail(|r| Ok(kernel.scaled_tail(r)? * f.eval(r)), a, &QuadratureConfig::default())
}

/// Finite-difference residual at every node; `None` at the two nodes
/// nearest the pole and at the last node.
pub fn residual_profile(manifold: &ModelManifold, sol: &RadialSolution, f: &SourceFunction) -> Vec<Option<f64>> {
    let n1 = (manifold.dim() - 1) as f64;
    let warp = manifold.warp();
    let (r, u) = (&sol.grid, &sol.u);
    let len = r.len();
    (0..len)
        .map(|i| {
            if i < 2 || i + 1 >= len {
                return None;
            }
            let (hl, hr) = (r[i] - r[i - 1], r[i + 1] - r[i]);
            let d2 = 2.0 * (hl * u[i + 1] - (hl + hr) * u[i] + hr * u[i - 1]) / (hl * hr * (hl + hr));
            let d1 = (u[i + 1] - u[i - 1]) / (hl + hr);
            Some(d2 + n1 * warp.local(r[i]).dlog * d1 - f.eval(r[i]))
        })
        .collect()
}

/// Largest finite-difference residual `|u'' + (n-1)(φ'/φ)u' − f|` over the
/// interior nodes, with central differences.
pub fn residual_check(manifold: &ModelManifold, sol: &RadialSolution, f: &SourceFunction) -> Result<f64> {
    let interior = sol.grid.len().saturating_sub(3);
    if interior < MIN_INTERIOR_NODES {
        return Err(Error::GridTooCoarse {
            interior,
            required: MIN_INTERIOR_NODES,
        });
    }
    Ok(residual_profile(manifold, sol, f)
        .into_iter()
        .flatten()
        .fold(0.0, |m, v| m.max(v.abs())))
}

/// `∫_0^∞ g(r) f(r) φ(r)^{n-1} dr` with `g = ∫_r^∞ φ^{1-n}` (no sphere-area
/// factor). Finite exactly when a solution vanishing at infinity exists.
pub fn potential_at_origin(kernel: &GreenKernel, f: &SourceFunction) -> Result<TailResult> {
    if kernel.is_parabolic() {
        return Err(Error::ParabolicManifold);
    }
    let inner = try_integrate(
        |r| if r == 0.0 { Ok(0.0) } else { Ok(kernel.scaled_tail(r)? * f.eval(r)) },
        0.0,
        1.0,
        &QuadratureConfig::default(),
    )?;
    let tail = potential_tail(kernel, f, 1.0)?;
    Ok(TailResult {
        value: inner + tail.value,
        converged: tail.converged,
        horizon: tail.horizon,
    })
}

/// Warping family whose radial curvature decays like `-r^γ`.
pub fn family_for_gamma(gamma: f64) -> Result<Warping> {
    Warping::for_curvature_exponent(gamma, DEFAULT_B, DEFAULT_DELTA)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpnessRow {
    pub gamma: f64,
    pub alpha: f64,
    pub converged: bool,
    pub alpha_star: f64,
    pub potential: f64,
}

/// Solvability of `Δu = (1+r)^{-α}` for each α on the model family of γ.
pub fn sharpness_scan(gamma: f64, alphas: &[f64], n: usize) -> Result<Vec<SharpnessRow>> {
    if alphas.is_empty() {
        return Err(Error::InvalidConfig("sharpness scan needs at least one alpha".into()));
    }
    let manifold = ModelManifold::new(n, family_for_gamma(gamma)?)?;
    let kernel = Arc::new(GreenKernel::build(&manifold)?);
    let alpha_star = model_threshold(gamma);
    alphas
        .par_iter()
        .map(|&alpha| {
            let f = SourceFunction::power_decay(1.0, alpha)?;
            let t = potential_at_origin(&kernel, &f)?;
            Ok(SharpnessRow {
                gamma,
                alpha,
                converged: t.converged,
                alpha_star,
                potential: t.value,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticCheck {
    pub gamma: f64,
    pub n: usize,
    pub fitted: f64,
    pub predicted: f64,
    pub pass: bool,
}

/// Fits the power-law part of the kernel tail `g` over the probe radii and
/// compares it with the model prediction: slope `-γ/2` of
/// `ln g + (n-1)B r^{1+γ/2}` for γ > -2, `1 - δ(n-1)` at γ = -2 and `2 - n`
/// below.
pub fn asymptotic_tail_check(gamma: f64, n: usize, r_probe: &[f64]) -> Result<AsymptoticCheck> {
    if r_probe.len() < 2 || r_probe.iter().any(|&r| !(r >= 4.0)) {
        return Err(Error::InvalidConfig("asymptotic probes need at least two radii, all >= 4".into()));
    }
    let manifold = ModelManifold::new(n, family_for_gamma(gamma)?)?;
    let kernel = GreenKernel::build(&manifold)?;
    let n1 = (n - 1) as f64;
    let mut xs = Vec::with_capacity(r_probe.len());
    let mut ys = Vec::with_capacity(r_probe.len());
    for &r in r_probe {
        let mut y = kernel.log_tail(r)?;
        if gamma > -2.0 {
            y += n1 * DEFAULT_B * r.powf(1.0 + 0.5 * gamma);
        }
        xs.push(r.ln());
        ys.push(y);
    }
    let (fitted, _, _) = fit_line(&xs, &ys)?;
    let predicted = if gamma > -2.0 {
        -0.5 * gamma
    } else if gamma == -2.0 {
        1.0 - DEFAULT_DELTA * n1
    } else {
        2.0 - n as f64
    };
    Ok(AsymptoticCheck {
        gamma,
        n,
        fitted,
        predicted,
        pass: (fitted - predicted).abs() <= 0.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_source_on_flat_space() {
        let m = ModelManifold::euclidean(3).unwrap();
        let f = SourceFunction::custom(|_| 6.0);
        let sol = solve_radial(&m, &f, 2.0, 1e-3, Normalization::ZeroAtOrigin, None).unwrap();
        for (i, &r) in sol.grid.iter().enumerate() {
            assert!((sol.u[i] - r * r).abs() < 1e-11);
            assert!((sol.u_prime[i] - 2.0 * r).abs() < 1e-11);
        }
        assert!(sol.residual_max.unwrap() < 1e-8);
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let m = ModelManifold::hyperbolic(3).unwrap();
        let k = GreenKernel::build(&m).unwrap();
        let f = SourceFunction::zero();
        for norm in [Normalization::ZeroAtOrigin, Normalization::VanishAtInfinity] {
            let sol = solve_radial(&m, &f, 5.0, 1e-2, norm, Some(&k)).unwrap();
            assert!(sol.u.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn beta_integral_potential() {
        // ∫_0^∞ r (1+r)^{-4} dr = B(2, 2) = 1/6.
        let m = ModelManifold::euclidean(3).unwrap();
        let k = GreenKernel::build(&m).unwrap();
        let f = SourceFunction::power_decay(1.0, 4.0).unwrap();
        let p = potential_at_origin(&k, &f).unwrap();
        assert!(p.converged);
        assert!((p.value - 1.0 / 6.0).abs() < 1e-9);

        let neg = f.scaled(-1.0);
        let sol = solve_radial(&m, &neg, 50.0, 0.01, Normalization::VanishAtInfinity, Some(&k)).unwrap();
        let err = sol.u[0] - 1.0 / 6.0;
        assert!(err.abs() < 1e-8, "{err:e}");

        let slow = SourceFunction::power_decay(1.0, 2.0).unwrap();
        assert!(!potential_at_origin(&k, &slow).unwrap().converged);
        assert!(matches!(
            solve_radial(&m, &slow, 10.0, 0.05, Normalization::VanishAtInfinity, Some(&k)),
            Err(Error::TailDivergence { .. })
        ));
    }

    #[test]
    fn hyperbolic_potential_converges_above_one() {
        let m = ModelManifold::hyperbolic(3).unwrap();
        let k = GreenKernel::build(&m).unwrap();
        let f = SourceFunction::power_decay(1.0, 1.5).unwrap();
        assert!(potential_at_origin(&k, &f).unwrap().converged);
    }

    fn max_residual_from(m: &ModelManifold, sol: &RadialSolution, f: &SourceFunction, r_min: f64) -> f64 {
        residual_profile(m, sol, f)
            .iter()
            .zip(&sol.grid)
            .filter(|(_, &r)| r >= r_min)
            .filter_map(|(v, _)| *v)
            .fold(0.0, |a, v| a.max(v.abs()))
    }

    #[test]
    fn fd_residual_is_second_order() {
        let m = ModelManifold::hyperbolic(3).unwrap();
        let f = SourceFunction::power_decay(1.0, 3.0).unwrap();
        let coarse = solve_radial(&m, &f, 10.0, 0.02, Normalization::ZeroAtOrigin, None).unwrap();
        let fine = solve_radial(&m, &f, 10.0, 0.01, Normalization::ZeroAtOrigin, None).unwrap();
        let away = max_residual_from(&m, &coarse, &f, 1.0) / max_residual_from(&m, &fine, &f, 1.0);
        assert!((3.5..=4.5).contains(&away), "{away}");
        // f'(0) != 0 leaves u''' nonzero at the pole, so (n-1)/r times the
        // central-difference error is first order at a fixed node index.
        let full = coarse.residual_max.unwrap() / fine.residual_max.unwrap();
        assert!((1.5..=2.5).contains(&full), "{full}");

        // Smooth even data is second order everywhere.
        let g = SourceFunction::custom(|r: f64| (-r * r).exp());
        let coarse = solve_radial(&m, &g, 10.0, 0.02, Normalization::ZeroAtOrigin, None).unwrap();
        let fine = solve_radial(&m, &g, 10.0, 0.01, Normalization::ZeroAtOrigin, None).unwrap();
        let ratio = coarse.residual_max.unwrap() / fine.residual_max.unwrap();
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn normalizations_share_residuals() {
        let m = ModelManifold::euclidean(3).unwrap();
        let k = GreenKernel::build(&m).unwrap();
        let f = SourceFunction::power_decay(1.0, 3.0).unwrap();
        let a = solve_radial(&m, &f, 10.0, 0.05, Normalization::ZeroAtOrigin, None).unwrap();
        let b = solve_radial(&m, &f, 10.0, 0.05, Normalization::VanishAtInfinity, Some(&k)).unwrap();
        assert!((a.residual_max.unwrap() - b.residual_max.unwrap()).abs() < 1e-12);
        let shift = b.u[0] - a.u[0];
        assert!(a.u.iter().zip(&b.u).all(|(x, y)| (y - x - shift).abs() < 1e-12));
    }

    #[test]
    fn coarse_grid_rejected() {
        let m = ModelManifold::euclidean(3).unwrap();
        let f = SourceFunction::custom(|_| 1.0);
        let sol = solve_radial(&m, &f, 1.0, 0.1, Normalization::ZeroAtOrigin, None).unwrap();
        assert!(sol.residual_max.is_none());
        assert!(matches!(residual_check(&m, &sol, &f), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn scans_and_asymptotics() {
        let rows = sharpness_scan(0.0, &[0.5, 1.5], 3).unwrap();
        assert_eq!(rows.iter().map(|r| r.converged).collect::<Vec<_>>(), vec![false, true]);
        let probes: Vec<f64> = (3..=10).map(|k| 2f64.powi(k)).collect();
        for g in [0.0, -2.0, -3.0] {
            let c = asymptotic_tail_check(g, 3, &probes).unwrap();
            assert!(c.pass, "{c:?}");
        }
    }
}
