//! Experiment configuration: a single JSON document, strictly validated.

use std::path::Path;

use radpoisson_core::criterion::{SourceFunction, Variant, DEFAULT_M0, DEFAULT_M_MAX, DEFAULT_MARGIN};
use radpoisson_core::geometry::{Knot, ModelManifold, Warping};
use radpoisson_core::green::{green_weight, hardy_weight, GreenKernel, WeightFunction};
use radpoisson_core::numerics::QuadratureConfig;
use radpoisson_core::solver::Normalization;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: ManifoldConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub weight: WeightConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analyze: Option<AnalyzeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<CriterionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharpness: Option<SharpnessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Euclidean,
    Hyperbolic,
    PowerExp,
    PowerLaw,
    LinearTail,
    Tabulated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub family: Family,
    #[serde(default)]
    pub params: Map<String, Value>,
    pub dim: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerExpParams {
    #[serde(rename = "B")]
    b: f64,
    gamma: f64,
    splice: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerLawParams {
    delta: f64,
    splice: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KnotConfig {
    r: f64,
    phi: f64,
    dphi: f64,
    #[serde(default)]
    ddphi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedParams {
    knots: Vec<KnotConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFamily {
    PowerDecay,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub family: SourceFamily,
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightChoice {
    Green,
    Hardy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub kind: WeightChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, rename = "Cprime", skip_serializing_if = "Option::is_none")]
    pub c_prime: Option<f64>,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            kind: WeightChoice::Green,
            gamma: None,
            c_prime: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub m0: usize,
    pub m_max: usize,
    pub r_max: Option<f64>,
    pub h: f64,
    pub seed: u64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self {
            abs_tol: q.abs_tol,
            rel_tol: q.rel_tol,
            m0: DEFAULT_M0,
            m_max: DEFAULT_M_MAX,
            r_max: None,
            h: 5e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeConfig {
    pub probe_radii: Vec<f64>,
    pub table_points: usize,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            probe_radii: vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            table_points: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantChoice {
    Thm1,
    Thm2,
}

impl From<VariantChoice> for Variant {
    fn from(v: VariantChoice) -> Self {
        match v {
            VariantChoice::Thm1 => Variant::Thm1,
            VariantChoice::Thm2 => Variant::Thm2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorollaryConfig {
    pub gamma1: f64,
    pub gamma2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionConfig {
    #[serde(default = "default_variant")]
    pub variant: VariantChoice,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corollary: Option<CorollaryConfig>,
}

fn default_variant() -> VariantChoice {
    VariantChoice::Thm2
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

impl Default for CriterionConfig {
    fn default() -> Self {
        Self {
            variant: default_variant(),
            margin: default_margin(),
            corollary: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationChoice {
    VanishAtInfinity,
    ZeroAtOrigin,
}

impl From<NormalizationChoice> for Normalization {
    fn from(v: NormalizationChoice) -> Self {
        match v {
            NormalizationChoice::VanishAtInfinity => Normalization::VanishAtInfinity,
            NormalizationChoice::ZeroAtOrigin => Normalization::ZeroAtOrigin,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    #[serde(default = "default_normalization")]
    pub normalization: NormalizationChoice,
}

fn default_normalization() -> NormalizationChoice {
    NormalizationChoice::VanishAtInfinity
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            normalization: default_normalization(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SharpnessConfig {
    pub gammas: Vec<f64>,
    /// Offsets from the model threshold at which α is sampled.
    pub offsets: Vec<f64>,
}

impl Default for SharpnessConfig {
    fn default() -> Self {
        Self {
            gammas: vec![2.0, 0.0, -2.0, -3.0],
            offsets: vec![-0.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub only: Vec<String>,
}

fn config_error(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config {
        path: path.to_string(),
        message: msg.to_string(),
    }
}

// serde reports a missing field at the enclosing object; name the field.
fn qualify(path: String, message: &str) -> String {
    let missing = message
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split('`').next());
    match (missing, path.as_str()) {
        (Some(field), ".") => field.to_string(),
        (Some(field), _) => format!("{path}.{field}"),
        (None, _) => path,
    }
}

fn parse_value<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let message = e.inner().to_string();
        let path = qualify(inner, &message);
        let full = if path == "." { prefix.to_string() } else { format!("{prefix}.{path}") };
        config_error(&full, message)
    })
}

impl ExperimentConfig {
    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let message = e.inner().to_string();
            let path = qualify(e.path().to_string(), &message);
            config_error(&path, message)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(".", format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        let n = &self.numerics;
        let positive = [("numerics.abs_tol", n.abs_tol), ("numerics.rel_tol", n.rel_tol), ("numerics.h", n.h)];
        for (path, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error(path, format!("must be positive and finite, got {v}")));
            }
        }
        if let Some(r) = n.r_max {
            if !(r > n.h && r.is_finite()) {
                return Err(config_error("numerics.r_max", format!("must be finite and exceed h = {}, got {r}", n.h)));
            }
        }
        if n.m0 < 1 || n.m_max < n.m0 + 16 {
            return Err(config_error("numerics.m_max", format!("need 1 <= m0 and m_max >= m0 + 16, got m0 = {}, m_max = {}", n.m0, n.m_max)));
        }
        if let Some(c) = &self.criterion {
            if !(c.margin >= 0.0 && c.margin < 1.0) {
                return Err(config_error("criterion.margin", format!("must lie in [0, 1), got {}", c.margin)));
            }
        }
        if let Some(s) = &self.sharpness {
            if s.gammas.is_empty() || s.offsets.is_empty() {
                return Err(config_error("sharpness", "gammas and offsets must be non-empty"));
            }
            if s.offsets.iter().any(|o| *o == 0.0 || !o.is_finite()) {
                return Err(config_error("sharpness.offsets", "offsets must be finite and non-zero"));
            }
        }
        if let Some(a) = &self.analyze {
            if a.probe_radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                return Err(config_error("analyze.probe_radii", "radii must be positive and finite"));
            }
            if a.table_points < 2 {
                return Err(config_error("analyze.table_points", "need at least 2 points"));
            }
        }
        self.build_manifold()?;
        Ok(())
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig::with_tolerances(self.numerics.abs_tol, self.numerics.rel_tol)
    }

    pub fn build_manifold(&self) -> Result<ModelManifold, CliError> {
        let m = &self.manifold;
        let params = Value::Object(m.params.clone());
        let p = "manifold.params";
        let warp = match m.family {
            Family::Euclidean => parse_value::<NoParams>(params, p).map(|_| Ok(Warping::euclidean()))?,
            Family::Hyperbolic => parse_value::<NoParams>(params, p).map(|_| Ok(Warping::hyperbolic()))?,
            Family::LinearTail => parse_value::<NoParams>(params, p).map(|_| Ok(Warping::linear_tail()))?,
            Family::PowerExp => {
                let q: PowerExpParams = parse_value(params, p)?;
                Warping::power_exp(q.b, q.gamma).and_then(|w| match q.splice {
                    Some([a, b]) => w.with_splice(a, b),
                    None => Ok(w),
                })
            }
            Family::PowerLaw => {
                let q: PowerLawParams = parse_value(params, p)?;
                Warping::power_law(q.delta).and_then(|w| match q.splice {
                    Some([a, b]) => w.with_splice(a, b),
                    None => Ok(w),
                })
            }
            Family::Tabulated => {
                let q: TabulatedParams = parse_value(params, p)?;
                Warping::tabulated(
                    q.knots
                        .into_iter()
                        .map(|k| Knot {
                            r: k.r,
                            phi: k.phi,
                            dphi: k.dphi,
                            ddphi: k.ddphi,
                        })
                        .collect(),
                )
            }
        }
        .map_err(|e| config_error(p, e))?;
        ModelManifold::new(m.dim, warp).map_err(|e| config_error("manifold.dim", e))
    }

    pub fn build_source(&self) -> Result<SourceFunction, CliError> {
        let s = self
            .source
            .as_ref()
            .ok_or_else(|| config_error("source", "missing field `source`, required by this command"))?;
        match s.family {
            SourceFamily::PowerDecay => SourceFunction::power_decay(s.c, s.alpha).map_err(|e| config_error("source", e)),
        }
    }

    /// The configured weight; `kernel` is needed for the Green weight.
    pub fn build_weight(&self, manifold: &ModelManifold, kernel: Option<&std::sync::Arc<GreenKernel>>) -> Result<WeightFunction, CliError> {
        let w = &self.weight;
        match w.kind {
            WeightChoice::Green => {
                if w.gamma.is_some() || w.c_prime.is_some() {
                    return Err(config_error("weight", "gamma and Cprime apply to the hardy weight only"));
                }
                let k = kernel.ok_or_else(|| config_error("weight.kind", "the green weight needs a non-parabolic manifold"))?;
                green_weight(k.clone()).map_err(|e| config_error("weight.kind", e))
            }
            WeightChoice::Hardy => {
                let gamma = w.gamma.ok_or_else(|| config_error("weight.gamma", "missing field `gamma`"))?;
                let c = w.c_prime.ok_or_else(|| config_error("weight.Cprime", "missing field `Cprime`"))?;
                hardy_weight(manifold, gamma, c).map_err(|e| config_error("weight", e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_of(text: &str) -> String {
        match ExperimentConfig::from_str(text) {
            Err(CliError::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config() {
        let c = ExperimentConfig::from_str(r#"{"manifold": {"family": "euclidean", "dim": 3}}"#).unwrap();
        assert_eq!(c.manifold.dim, 3);
        assert_eq!(c.weight.kind, WeightChoice::Green);
        assert_eq!(c.numerics.m_max, DEFAULT_M_MAX);
    }

    #[test]
    fn missing_dim_is_named() {
        assert_eq!(path_of(r#"{"manifold": {"family": "euclidean"}}"#), "manifold.dim");
        assert_eq!(path_of(r#"{"source": {"family": "power_decay", "C": 1, "alpha": 2}}"#), "manifold");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert_eq!(path_of(r#"{"manifold": {"family": "euclidean", "dim": 3, "extra": 1}}"#), "manifold.extra");
        assert_eq!(path_of(r#"{"manifold": {"family": "euclidean", "dim": 3}, "numerics": {"tol": 1}}"#), "numerics.tol");
        let p = path_of(r#"{"manifold": {"family": "power_exp", "params": {"B": 1, "gamma": 0, "x": 0}, "dim": 3}}"#);
        assert_eq!(p, "manifold.params.x");
    }

    #[test]
    fn params_paths() {
        let p = path_of(r#"{"manifold": {"family": "power_exp", "params": {"gamma": 0}, "dim": 3}}"#);
        assert_eq!(p, "manifold.params.B");
        let p = path_of(r#"{"manifold": {"family": "power_law", "params": {"delta": "two"}, "dim": 3}}"#);
        assert_eq!(p, "manifold.params.delta");
        let p = path_of(r#"{"manifold": {"family": "power_law", "params": {"delta": 0.5}, "dim": 3}}"#);
        assert_eq!(p, "manifold.params");
        assert_eq!(path_of(r#"{"manifold": {"family": "euclidean", "dim": 2}}"#), "manifold.dim");
    }

    #[test]
    fn numeric_validation() {
        assert_eq!(path_of(r#"{"manifold": {"family": "euclidean", "dim": 3}, "numerics": {"h": -1}}"#), "numerics.h");
        assert_eq!(path_of(r#"{"manifold": {"family": "euclidean", "dim": 3}, "numerics": {"m_max": 4}}"#), "numerics.m_max");
        assert_eq!(path_of(r#"{"manifold": {"family": "euclidean", "dim": 1e999}}"#), "manifold.dim");
    }

    #[test]
    fn tabulated_knots() {
        let text = r#"{"manifold": {"family": "tabulated", "dim": 3, "params": {"knots": [
            {"r": 0, "phi": 0, "dphi": 1}, {"r": 1, "phi": 0.8, "dphi": 0.2}, {"r": 2, "phi": 1, "dphi": 0}]}}}"#;
        let c = ExperimentConfig::from_str(text).unwrap();
        assert!(GreenKernel::build(&c.build_manifold().unwrap()).unwrap().is_parabolic());
    }

    #[test]
    fn echo_round_trips() {
        let text = r#"{"manifold": {"family": "power_exp", "params": {"B": 0.2, "gamma": 1}, "dim": 3},
            "source": {"family": "power_decay", "C": 1, "alpha": 3}, "weight": {"kind": "hardy", "gamma": -2, "Cprime": 0.25}}"#;
        let c = ExperimentConfig::from_str(text).unwrap();
        let echo = serde_json::to_string(&c).unwrap();
        let again = ExperimentConfig::from_str(&echo).unwrap();
        assert_eq!(serde_json::to_string(&again).unwrap(), echo);
    }
}
