//! Scalar numerics: adaptive Gauss-Kronrod quadrature on finite and
//! semi-infinite intervals, suprema over intervals and power-law fits.
//!
//! Everything here is a pure function of its arguments.

mod fit;
mod quad;
mod sup;
mod tail;

pub use fit::{fit_line, fit_power_law, PowerFit};
pub use quad::{integrate, integrate_estimate, Estimate, QuadratureConfig};
pub use sup::{sup_on, SupConfig, SupResult};
pub use tail::{integrate_tail, TailResult};

use std::cell::RefCell;

use crate::error::Result;

/// Runs `body` with a plain `f64` integrand built from a fallible one. The
/// first error raised by `f` is returned in preference to whatever the
/// quadrature made of the NaN that stood in for it.
fn with_fallible<F, T, B>(f: F, body: B) -> Result<T>
where
    F: Fn(f64) -> Result<f64>,
    B: FnOnce(&dyn Fn(f64) -> f64) -> Result<T>,
{
    let failure = RefCell::new(None);
    let plain = |x: f64| match f(x) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let out = body(&plain);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => out,
    }
}

/// [`integrate`] for integrands that can fail.
pub fn try_integrate<F: Fn(f64) -> Result<f64>>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    with_fallible(f, |g| integrate(g, a, b, cfg))
}

/// [`integrate_tail`] for integrands that can fail.
pub fn try_integrate_tail<F: Fn(f64) -> Result<f64>>(f: F, a: f64, cfg: &QuadratureConfig) -> Result<TailResult> {
    with_fallible(f, |g| integrate_tail(g, a, cfg))
}
