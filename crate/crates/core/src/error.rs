use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Divergence of an improper integral is *not* an error: it is reported
/// through [`crate::numerics::TailResult::converged`]. Only the places where
/// a convergent value is required (for example a solution normalised to
/// vanish at infinity) turn divergence into [`Error::TailDivergence`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("adaptive quadrature on [{a}, {b}] did not reach tolerance within depth {max_depth}")]
    NonConvergent { a: f64, b: f64, max_depth: u32 },

    #[error("integrand or sampled function is not finite at x = {x}")]
    NonFinite { x: f64 },

    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("supremum is unbounded (sample {value} at x = {x})")]
    Unbounded { x: f64, value: f64 },

    #[error("degenerate power-law fit: {0}")]
    DegenerateFit(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("negative radius {0}")]
    NegativeRadius(f64),

    #[error("annulus half-width {half_width} must satisfy 0 < R < r = {radius}")]
    InvalidAnnulus { radius: f64, half_width: f64 },

    #[error("radius {radius} lies below the rate-function anchor {anchor}")]
    BelowAnchor { radius: f64, anchor: f64 },

    #[error("model manifold dimension must be at least 3, got {0}")]
    InvalidDimension(usize),

    #[error("invalid warping function: {0}")]
    InvalidWarping(String),

    #[error("manifold is parabolic: no minimal positive Green's function")]
    ParabolicManifold,

    #[error("warping function has negative second derivative at r = {0}")]
    NotCartanHadamard(f64),

    #[error("Green level {level} outside the attainable range (0, {max}]")]
    LevelOutOfRange { level: f64, max: f64 },

    #[error("test function has vanishing Dirichlet energy")]
    DegenerateTestFunction,

    #[error("curvature exponents violate gamma1 >= gamma2 and gamma1 >= 0 (gamma1 = {gamma1}, gamma2 = {gamma2})")]
    InvalidExponents { gamma1: f64, gamma2: f64 },

    #[error("the potential integral diverges beyond r = {horizon}; no solution vanishing at infinity")]
    TailDivergence { horizon: f64 },

    #[error("grid too coarse: {interior} interior nodes, need at least {required}")]
    GridTooCoarse { interior: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
