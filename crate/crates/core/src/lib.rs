//! Numerical toolkit for the Poisson equation `Δu = f` on rotationally
//! symmetric model manifolds.
//!
//! * [`numerics`]: adaptive quadrature, improper integrals, suprema, power-law fits.
//! * [`geometry`]: warping families, radial curvature, the annulus quantities
//!   K_R, I_R, Q_R and the rate function ω.
//! * [`green`]: the minimal positive Green's function, Poincaré weights and
//!   checks of the Green's-function estimates and identities.
//! * [`criterion`]: the admissibility series for a source `f` and closed-form
//!   decay thresholds.
//! * [`solver`]: radial solutions of `Δu = f` and sharpness scans.
//! * [`verify`]: the named check suite behind `radpoisson verify`.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criterion;
pub mod error;
pub mod geometry;
pub mod green;
pub mod numerics;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
