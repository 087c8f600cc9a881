use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use radpoisson_core::criterion::{term_thm1, term_thm2, SourceFunction};
use radpoisson_core::geometry::{ModelManifold, OmegaTable, Warping};
use radpoisson_core::green::{green_weight, GreenKernel};
use radpoisson_core::numerics::{fit_power_law, integrate, integrate_tail, sup_on, QuadratureConfig, SupConfig};
use radpoisson_core::solver::{solve_radial, Normalization};

fn families() -> &'static Vec<ModelManifold> {
    static F: OnceLock<Vec<ModelManifold>> = OnceLock::new();
    F.get_or_init(|| {
        vec![
            ModelManifold::euclidean(3).unwrap(),
            ModelManifold::euclidean(5).unwrap(),
            ModelManifold::hyperbolic(3).unwrap(),
            ModelManifold::new(3, Warping::power_exp(0.2, 1.0).unwrap()).unwrap(),
            ModelManifold::new(3, Warping::power_exp(1.0, 2.0).unwrap()).unwrap(),
            ModelManifold::new(3, Warping::power_law(2.0).unwrap()).unwrap(),
            ModelManifold::new(3, Warping::linear_tail()).unwrap(),
        ]
    })
}

fn kernels() -> &'static Vec<Arc<GreenKernel>> {
    static K: OnceLock<Vec<Arc<GreenKernel>>> = OnceLock::new();
    K.get_or_init(|| families().iter().map(|m| Arc::new(GreenKernel::build(m).unwrap())).collect())
}

fn hyperbolic_setup() -> &'static (Arc<GreenKernel>, OmegaTable) {
    static S: OnceLock<(Arc<GreenKernel>, OmegaTable)> = OnceLock::new();
    S.get_or_init(|| {
        let m = ModelManifold::hyperbolic(3).unwrap();
        let t = OmegaTable::new(&m, 513.0, &QuadratureConfig::default()).unwrap();
        (Arc::new(GreenKernel::build(&m).unwrap()), t)
    })
}

fn omega_tables() -> &'static Vec<OmegaTable> {
    static T: OnceLock<Vec<OmegaTable>> = OnceLock::new();
    T.get_or_init(|| families().iter().map(|m| OmegaTable::new(m, 500.0, &QuadratureConfig::default()).unwrap()).collect())
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * x + k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_is_linear(
        p in prop::collection::vec(-2.0f64..2.0, 1..7),
        q in prop::collection::vec(-2.0f64..2.0, 1..7),
        al in -3.0f64..3.0,
        be in -3.0f64..3.0,
        a in -2.0f64..0.0,
        w in 0.1f64..3.0,
    ) {
        let cfg = QuadratureConfig::default();
        let b = a + w;
        let lhs = integrate(|x| al * poly(&p, x) + be * poly(&q, x), a, b, &cfg).unwrap();
        let rhs = al * integrate(|x| poly(&p, x), a, b, &cfg).unwrap() + be * integrate(|x| poly(&q, x), a, b, &cfg).unwrap();
        let tol = cfg.abs_tol.max(cfg.rel_tol * lhs.abs());
        prop_assert!((lhs - rhs).abs() <= 3.0 * tol, "gap {}", (lhs - rhs).abs());
    }

    #[test]
    fn tail_splits_consistently(a in 1.0f64..99.0, frac in 0.0f64..1.0) {
        let cfg = QuadratureConfig::default();
        let b = a + frac * (100.0 - a) + 1e-9;
        let f = |t: f64| t.powi(-2);
        let gap = integrate_tail(f, a, &cfg).unwrap().value - integrate(f, a, b, &cfg).unwrap() - integrate_tail(f, b, &cfg).unwrap().value;
        prop_assert!(gap.abs() <= 3.0 * cfg.abs_tol.max(cfg.rel_tol), "gap {gap:e}");
    }

    #[test]
    fn sup_of_decreasing_is_left_end(a in 0.01f64..100.0, p in 0.1f64..4.0, k in 0.0f64..2.0, c in 0.1f64..10.0) {
        let s = sup_on(|r: f64| c * (1.0 + r).powf(-p) + (-k * r).exp(), a, f64::INFINITY, &SupConfig::default()).unwrap();
        prop_assert_eq!(s.argsup, a);
        prop_assert!(s.monotone_tail);
    }

    #[test]
    fn power_fit_recovers_exponent(p in -4.0f64..2.0, c in 1e-3f64..1e3, m0 in 2usize..64, len in 8usize..200) {
        let pts: Vec<(f64, f64)> = (m0..m0 + len).map(|m| (m as f64, c * (m as f64).powf(p))).collect();
        let fit = fit_power_law(&pts).unwrap();
        prop_assert!((fit.exponent - p).abs() < 1e-6);
    }

    #[test]
    fn warp_derivatives_match_differences(i in 0usize..7, lr in (0.02f64).ln()..(1e3f64).ln()) {
        let m = &families()[i];
        let r = lr.exp();
        let warp = m.warp();
        prop_assume!(warp.knots().iter().all(|k| (r - k).abs() > 1e-3));
        let loc = warp.local(r);
        prop_assert!(loc.log_phi.is_finite());
        let h = 1e-5 * r.max(1.0);
        let l = |x: f64| warp.local(x).log_phi;
        let d1 = (l(r + h) - l(r - h)) / (2.0 * h);
        let d2 = (l(r + h) - 2.0 * l(r) + l(r - h)) / (h * h);
        prop_assert!((d1 - loc.dlog).abs() <= 1e-5 * loc.dlog.abs().max(1.0));
        // φ''/φ = (log φ)'' + (log φ)'^2 cancels near the pole; measure against the terms.
        prop_assert!((d2 + d1 * d1 - loc.curv).abs() <= 1e-5 * loc.curv.abs().max(d1 * d1).max(1.0));
    }

    #[test]
    fn k_sup_dominates_and_q_dominates_branches(i in 0usize..7, r in 1.5f64..300.0, frac in 0.05f64..0.95, u in 0.0f64..1.0) {
        let m = &families()[i];
        let half = frac * r;
        let k = m.k_sup(r, half).unwrap();
        let t = r - half + 2.0 * half * u;
        prop_assert!(k >= m.warp().local(t).curv - 1e-12 * k.abs().max(1.0));
        let q = m.q_of(r, half).unwrap();
        let i_r = m.i_of(r, half).unwrap();
        prop_assert!(q >= k && q >= i_r / half && q >= 1.0 / (half * half));
    }

    #[test]
    fn omega_is_nondecreasing(i in 0usize..7, r1 in 1.0f64..500.0, r2 in 1.0f64..500.0) {
        let t = &omega_tables()[i];
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(t.omega(lo).unwrap() <= t.omega(hi).unwrap());
    }

    #[test]
    fn green_is_strictly_decreasing(i in 0usize..7, lr in (1e-3f64).ln()..(500f64).ln(), ratio in 1.001f64..4.0) {
        let k = &kernels()[i];
        let r = lr.exp();
        prop_assert!(k.log_green(r * ratio).unwrap() < k.log_green(r).unwrap());
        // φ^{1-n} may underflow, so only the sign is checked here.
        prop_assert!(k.green_derivative(r).unwrap() <= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn criterion_terms_scale(c in 0.01f64..100.0, alpha in 0.5f64..4.0, m in 2usize..=512) {
        let (k, t) = hyperbolic_setup();
        let f = SourceFunction::power_decay(1.0, alpha).unwrap();
        let a = term_thm2(k, t, &f, m, 512).unwrap();
        let b = term_thm2(k, t, &f.scaled(c), m, 512).unwrap();
        prop_assert!((b / (c * a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn criterion_terms_monotone_in_source(
        c1 in 0.1f64..10.0, dc in 0.0f64..10.0, a2 in 0.5f64..4.0, da in 0.0f64..2.0, m in 2usize..=512,
    ) {
        let (k, t) = hyperbolic_setup();
        // (1+r)^{-α} decreases in α, so f1 ≤ f2 pointwise.
        let f1 = SourceFunction::power_decay(c1, a2 + da).unwrap();
        let f2 = SourceFunction::power_decay(c1 + dc, a2).unwrap();
        prop_assert!(term_thm2(k, t, &f1, m, 512).unwrap() <= term_thm2(k, t, &f2, m, 512).unwrap());
    }

    #[test]
    fn thm1_term_dominates_thm2(alpha in 0.5f64..4.0, m in 2usize..=512) {
        let (k, t) = hyperbolic_setup();
        let f = SourceFunction::power_decay(1.0, alpha).unwrap();
        let rho = green_weight(k.clone()).unwrap();
        let t1 = term_thm1(t, |_| Ok(rho.clone()), &f, m, 512).unwrap();
        prop_assert!(t1 >= term_thm2(k, t, &f, m, 512).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solver_is_linear(i in 0usize..7, al in -3.0f64..3.0, be in -3.0f64..3.0, s in 0.5f64..3.0) {
        let m = &families()[i];
        let f = SourceFunction::custom(move |r: f64| (-r / s).exp());
        let g = SourceFunction::custom(|r: f64| 1.0 / (1.0 + r * r));
        let fg = {
            let (f, g) = (f.clone(), g.clone());
            SourceFunction::custom(move |r| al * f.eval(r) + be * g.eval(r))
        };
        let solve = |src: &SourceFunction| solve_radial(m, src, 10.0, 1e-2, Normalization::ZeroAtOrigin, None).unwrap();
        let (uf, ug, ufg) = (solve(&f), solve(&g), solve(&fg));
        for j in 0..ufg.u.len() {
            let scale = 1.0 + ufg.u[j].abs();
            prop_assert!((ufg.u[j] - al * uf.u[j] - be * ug.u[j]).abs() <= 5e-9 * scale, "node {}", j);
        }
    }
}
