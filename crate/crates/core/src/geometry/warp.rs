use serde::Serialize;

use crate::error::{Error, Result};

/// Which profile a [`Warping`] follows far from the pole.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WarpingKind {
    /// φ(r) = r.
    Euclidean,
    /// φ(r) = sinh r.
    Hyperbolic,
    /// φ(r) ∝ exp(B r^{1+γ/2}) for large r, γ > -2.
    PowerExp { b: f64, gamma: f64 },
    /// φ(r) ∝ r^δ for large r, δ > 1.
    PowerLaw { delta: f64 },
    /// φ(r) ∝ r for large r, glued to the pole through a blend.
    LinearTail,
    /// Cubic Hermite interpolation of user-supplied samples.
    Tabulated { knots: usize },
}

/// Radial sample of a tabulated warping function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Knot {
    pub r: f64,
    pub phi: f64,
    pub dphi: f64,
    /// Accepted for completeness of the sample record; evaluation takes
    /// second derivatives from the interpolant.
    pub ddphi: f64,
}

/// Scale-free local data: log φ, φ'/φ and φ''/φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalWarp {
    pub log_phi: f64,
    pub dlog: f64,
    pub curv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TailFormula {
    PowerExp { b: f64, p: f64 },
    PowerLaw { delta: f64 },
    Linear,
}

impl TailFormula {
    // log φ without the multiplicative constant.
    fn log(&self, r: f64) -> f64 {
        match *self {
            TailFormula::PowerExp { b, p } => b * r.powf(p),
            TailFormula::PowerLaw { delta } => delta * r.ln(),
            TailFormula::Linear => r.ln(),
        }
    }

    fn dlog(&self, r: f64) -> f64 {
        match *self {
            TailFormula::PowerExp { b, p } => b * p * r.powf(p - 1.0),
            TailFormula::PowerLaw { delta } => delta / r,
            TailFormula::Linear => 1.0 / r,
        }
    }

    fn curv(&self, r: f64) -> f64 {
        match *self {
            TailFormula::PowerExp { b, p } => {
                let d = b * p * r.powf(p - 1.0);
                d * d + b * p * (p - 1.0) * r.powf(p - 2.0)
            }
            TailFormula::PowerLaw { delta } => delta * (delta - 1.0) / (r * r),
            TailFormula::Linear => 0.0,
        }
    }

    // log φ(r + d) - log φ(r) without cancellation.
    fn log_diff(&self, r: f64, d: f64) -> f64 {
        let rel = (d / r).ln_1p();
        match *self {
            TailFormula::PowerExp { b, p } => b * r.powf(p) * (p * rel).exp_m1(),
            TailFormula::PowerLaw { delta } => delta * rel,
            TailFormula::Linear => rel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Spliced {
    tail: TailFormula,
    r0: f64,
    r1: f64,
    // Hermite data for log φ on [r0, r1].
    l0: f64,
    s0: f64,
    l1: f64,
    s1: f64,
    log_scale: f64,
}

impl Spliced {
    fn new(tail: TailFormula, r0: f64, r1: f64) -> Result<Self> {
        if !(r0 > 0.0 && r1 > r0 && r1.is_finite()) {
            return Err(Error::InvalidWarping(format!("splice interval must satisfy 0 < r0 < r1, got ({r0}, {r1})")));
        }
        let l0 = r0.ln();
        let s0 = 1.0 / r0;
        let s1 = tail.dlog(r1);
        // The end value is chosen so that the Hermite cubic degenerates to
        // a quadratic: the log-slope moves linearly from 1/r0 to s1.
        let l1 = l0 + 0.5 * (s0 + s1) * (r1 - r0);
        let log_scale = l1 - tail.log(r1);
        Ok(Self {
            tail,
            r0,
            r1,
            l0,
            s0,
            l1,
            s1,
            log_scale,
        })
    }

    fn blend(&self, r: f64) -> LocalWarp {
        let w = self.r1 - self.r0;
        let t = (r - self.r0) / w;
        let (t2, t3) = (t * t, t * t * t);
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * self.l0
            + (t3 - 2.0 * t2 + t) * w * self.s0
            + (-2.0 * t3 + 3.0 * t2) * self.l1
            + (t3 - t2) * w * self.s1;
        let slope = ((6.0 * t2 - 6.0 * t) * self.l0
            + (3.0 * t2 - 4.0 * t + 1.0) * w * self.s0
            + (-6.0 * t2 + 6.0 * t) * self.l1
            + (3.0 * t2 - 2.0 * t) * w * self.s1)
            / w;
        let second = ((12.0 * t - 6.0) * self.l0
            + (6.0 * t - 4.0) * w * self.s0
            + (-12.0 * t + 6.0) * self.l1
            + (6.0 * t - 2.0) * w * self.s1)
            / (w * w);
        LocalWarp {
            log_phi: value,
            dlog: slope,
            curv: second + slope * slope,
        }
    }

    fn local(&self, r: f64) -> LocalWarp {
        if r <= self.r0 {
            identity(r)
        } else if r >= self.r1 {
            LocalWarp {
                log_phi: self.log_scale + self.tail.log(r),
                dlog: self.tail.dlog(r),
                curv: self.tail.curv(r),
            }
        } else {
            self.blend(r)
        }
    }

    fn log_ratio(&self, r: f64, d: f64) -> f64 {
        let t = r + d;
        if r >= self.r1 && t >= self.r1 {
            self.tail.log_diff(r, d)
        } else if r <= self.r0 && t <= self.r0 {
            (d / r).ln_1p()
        } else {
            self.local(t).log_phi - self.local(r).log_phi
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Tabulated {
    knots: Vec<Knot>,
}

impl Tabulated {
    fn new(knots: Vec<Knot>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidWarping("tabulated warping needs at least two knots".into()));
        }
        let first = knots[0];
        if first.r != 0.0 || first.phi.abs() > 1e-12 || (first.dphi - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWarping(
                "first knot must be (r, phi, phi') = (0, 0, 1)".into(),
            ));
        }
        for k in &knots {
            if ![k.r, k.phi, k.dphi, k.ddphi].iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidWarping("knot values must be finite".into()));
            }
            if k.dphi < 0.0 {
                return Err(Error::InvalidWarping(format!("phi' must be nonnegative (knot r = {})", k.r)));
            }
        }
        for pair in knots.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if !(b.r > a.r) {
                return Err(Error::InvalidWarping("knot radii must be strictly increasing".into()));
            }
            if !(b.phi > 0.0) || b.phi < a.phi {
                return Err(Error::InvalidWarping(format!(
                    "phi must be positive and nondecreasing (knot r = {})",
                    b.r
                )));
            }
            let secant = (b.phi - a.phi) / (b.r - a.r);
            if secant == 0.0 {
                if a.dphi != 0.0 || b.dphi != 0.0 {
                    return Err(Error::InvalidWarping(format!(
                        "flat cell ending at r = {} needs zero slopes",
                        b.r
                    )));
                }
            } else {
                let (alpha, beta) = (a.dphi / secant, b.dphi / secant);
                if alpha * alpha + beta * beta > 9.0 + 1e-12 {
                    return Err(Error::InvalidWarping(format!(
                        "slopes on the cell ending at r = {} break monotone interpolation",
                        b.r
                    )));
                }
            }
        }
        Ok(Self { knots })
    }

    // (φ, φ', φ'')
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let last = *self.knots.last().unwrap();
        if r >= last.r {
            return (last.phi + last.dphi * (r - last.r), last.dphi, 0.0);
        }
        let i = self.knots.partition_point(|k| k.r <= r).saturating_sub(1);
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        let w = b.r - a.r;
        let t = (r - a.r) / w;
        let (t2, t3) = (t * t, t * t * t);
        let phi = (2.0 * t3 - 3.0 * t2 + 1.0) * a.phi
            + (t3 - 2.0 * t2 + t) * w * a.dphi
            + (-2.0 * t3 + 3.0 * t2) * b.phi
            + (t3 - t2) * w * b.dphi;
        let dphi = ((6.0 * t2 - 6.0 * t) * a.phi
            + (3.0 * t2 - 4.0 * t + 1.0) * w * a.dphi
            + (-6.0 * t2 + 6.0 * t) * b.phi
            + (3.0 * t2 - 2.0 * t) * w * b.dphi)
            / w;
        let ddphi = ((12.0 * t - 6.0) * a.phi
            + (6.0 * t - 4.0) * w * a.dphi
            + (-12.0 * t + 6.0) * b.phi
            + (6.0 * t - 2.0) * w * b.dphi)
            / (w * w);
        (phi, dphi, ddphi)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Profile {
    Euclidean,
    Hyperbolic,
    Spliced(Spliced),
    Tabulated(Tabulated),
}

fn identity(r: f64) -> LocalWarp {
    LocalWarp {
        log_phi: r.ln(),
        dlog: 1.0 / r,
        curv: 0.0,
    }
}

// log sinh r, accurate for small and large r.
fn ln_sinh(r: f64) -> f64 {
    r - std::f64::consts::LN_2 + (-(-2.0 * r).exp_m1()).ln()
}

/// Default splice interval for families that are prescribed only far from
/// the pole: φ(r) = r on `[0, 1]`, the tail formula on `[2, ∞)`.
pub const DEFAULT_SPLICE: (f64, f64) = (1.0, 2.0);

/// Warping function φ of a model metric `dr² + φ(r)² dθ²`.
///
/// Every constructor yields φ(0) = 0, φ'(0) = 1 and φ > 0 on (0, ∞).
/// Families given by an asymptotic formula are glued to φ(r) = r near the
/// pole by a C¹ cubic Hermite blend of log φ; the tail formula's
/// multiplicative constant is rescaled to match the blend at the outer knot.
#[derive(Debug, Clone, PartialEq)]
pub struct Warping {
    kind: WarpingKind,
    profile: Profile,
}

impl Warping {
    pub fn euclidean() -> Self {
        Self {
            kind: WarpingKind::Euclidean,
            profile: Profile::Euclidean,
        }
    }

    pub fn hyperbolic() -> Self {
        Self {
            kind: WarpingKind::Hyperbolic,
            profile: Profile::Hyperbolic,
        }
    }

    pub fn power_exp(b: f64, gamma: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) || !(gamma > -2.0 && gamma.is_finite()) {
            return Err(Error::InvalidWarping(format!("power_exp needs B > 0 and gamma > -2, got B = {b}, gamma = {gamma}")));
        }
        let tail = TailFormula::PowerExp { b, p: 1.0 + 0.5 * gamma };
        Ok(Self {
            kind: WarpingKind::PowerExp { b, gamma },
            profile: Profile::Spliced(Spliced::new(tail, DEFAULT_SPLICE.0, DEFAULT_SPLICE.1)?),
        })
    }

    pub fn power_law(delta: f64) -> Result<Self> {
        if !(delta > 1.0 && delta.is_finite()) {
            return Err(Error::InvalidWarping(format!("power_law needs delta > 1, got {delta}")));
        }
        let tail = TailFormula::PowerLaw { delta };
        Ok(Self {
            kind: WarpingKind::PowerLaw { delta },
            profile: Profile::Spliced(Spliced::new(tail, DEFAULT_SPLICE.0, DEFAULT_SPLICE.1)?),
        })
    }

    pub fn linear_tail() -> Self {
        let spliced = Spliced::new(TailFormula::Linear, DEFAULT_SPLICE.0, DEFAULT_SPLICE.1)
            .expect("default splice interval is valid");
        Self {
            kind: WarpingKind::LinearTail,
            profile: Profile::Spliced(spliced),
        }
    }

    pub fn tabulated(knots: Vec<Knot>) -> Result<Self> {
        let n = knots.len();
        Ok(Self {
            kind: WarpingKind::Tabulated { knots: n },
            profile: Profile::Tabulated(Tabulated::new(knots)?),
        })
    }

    /// Family whose radial Ricci curvature decays like `-r^γ`:
    /// `power_exp(b, γ)` for γ > -2, `power_law(δ)` at γ = -2 and
    /// `linear_tail` below.
    pub fn for_curvature_exponent(gamma: f64, b: f64, delta: f64) -> Result<Self> {
        if gamma > -2.0 {
            Self::power_exp(b, gamma)
        } else if gamma == -2.0 {
            Self::power_law(delta)
        } else if gamma < -2.0 {
            Ok(Self::linear_tail())
        } else {
            Err(Error::InvalidWarping(format!("invalid curvature exponent {gamma}")))
        }
    }

    /// Moves the blend interval of a spliced family.
    pub fn with_splice(self, r0: f64, r1: f64) -> Result<Self> {
        match self.profile {
            Profile::Spliced(s) => Ok(Self {
                kind: self.kind,
                profile: Profile::Spliced(Spliced::new(s.tail, r0, r1)?),
            }),
            _ => Err(Error::InvalidWarping("only asymptotic families carry a splice interval".into())),
        }
    }

    pub fn kind(&self) -> &WarpingKind {
        &self.kind
    }

    pub fn splice(&self) -> Option<(f64, f64)> {
        match &self.profile {
            Profile::Spliced(s) => Some((s.r0, s.r1)),
            _ => None,
        }
    }

    /// Radii where φ is only C¹ (splice ends or table knots).
    pub fn knots(&self) -> Vec<f64> {
        match &self.profile {
            Profile::Spliced(s) => vec![s.r0, s.r1],
            Profile::Tabulated(t) => t.knots.iter().skip(1).map(|k| k.r).collect(),
            _ => Vec::new(),
        }
    }

    /// log φ, φ'/φ and φ''/φ at `r > 0`; finite wherever φ itself would
    /// overflow.
    pub fn local(&self, r: f64) -> LocalWarp {
        match &self.profile {
            Profile::Euclidean => identity(r),
            Profile::Hyperbolic => LocalWarp {
                log_phi: ln_sinh(r),
                dlog: 1.0 / r.tanh(),
                curv: 1.0,
            },
            Profile::Spliced(s) => s.local(r),
            Profile::Tabulated(t) => {
                let (phi, dphi, ddphi) = t.eval(r);
                LocalWarp {
                    log_phi: phi.ln(),
                    dlog: dphi / phi,
                    curv: ddphi / phi,
                }
            }
        }
    }

    /// `log φ(r + d) − log φ(r)` for `r > 0`, `r + d > 0`.
    pub fn log_ratio(&self, r: f64, d: f64) -> f64 {
        match &self.profile {
            Profile::Euclidean => (d / r).ln_1p(),
            Profile::Hyperbolic => {
                let t = r + d;
                d + (-(-2.0 * t).exp_m1()).ln() - (-(-2.0 * r).exp_m1()).ln()
            }
            Profile::Spliced(s) => s.log_ratio(r, d),
            Profile::Tabulated(t) => (t.eval(r + d).0 / t.eval(r).0).ln(),
        }
    }

    /// (φ, φ', φ'') at `r >= 0`. Values may overflow to infinity for
    /// exponentially growing families; use [`Warping::local`] there.
    pub fn eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::NegativeRadius(r));
        }
        Ok(match &self.profile {
            Profile::Euclidean => (r, 1.0, 0.0),
            Profile::Hyperbolic => (r.sinh(), r.cosh(), r.sinh()),
            Profile::Tabulated(t) => t.eval(r),
            Profile::Spliced(s) if r <= s.r0 => (r, 1.0, 0.0),
            Profile::Spliced(_) => {
                let l = self.local(r);
                let phi = l.log_phi.exp();
                (phi, phi * l.dlog, phi * l.curv)
            }
        })
    }
}
