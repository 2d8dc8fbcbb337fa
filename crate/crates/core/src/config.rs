//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::{LemmaForm, C1_MAX};
use crate::geometry::ManifoldSpec;
use crate::harnack::PairSampling;
use crate::pde::{PdeParams, Stepper};
use crate::schemes::{SchemeKind, SchemeSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Seeds pair sampling when the Harnack lattice is capped.
    #[serde(default)]
    pub seed: u64,
    pub manifold: ManifoldSpec,
    #[serde(default)]
    pub pde: PdeParams,
    pub initial: InitialData,
    pub time: TimeConfig,
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub j: JConfig,
    #[serde(default)]
    pub constants: ConstantsConfig,
    #[serde(default)]
    pub region: RegionConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Initial data `u(·, 0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    Constant { value: f64 },
    /// `mean + amplitude·cos(wavenumber·x_axis)`
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
        #[serde(default)]
        axis: usize,
    },
    /// `floor + (4πτ)^{−n/2} exp(−d(x, center)²/(4τ))`; the center defaults to the region origin.
    HeatKernel {
        #[serde(default)]
        center: Option<Vec<f64>>,
        tau: f64,
        #[serde(default)]
        floor: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Explicit step; when absent, `cfl_fraction` of the stability limit is used.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_cfl_fraction")]
    pub cfl_fraction: f64,
    /// Horizon `T`, measured from the start of the solve.
    pub horizon: f64,
    /// Start of the check window; defaults to two stored steps.
    #[serde(default)]
    pub t0: Option<f64>,
    /// Time coordinate of the initial data (affects only the potential).
    #[serde(default)]
    pub t_start: f64,
    #[serde(default = "default_store_every")]
    pub store_every: usize,
    #[serde(default)]
    pub stepper: Stepper,
}

fn default_cfl_fraction() -> f64 {
    1.0
}

fn default_store_every() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub delta: f64,
    #[serde(default)]
    pub rate: f64,
    pub epsilon: f64,
    pub lambda: f64,
}

impl SchemeConfig {
    pub fn to_spec(&self, dimension: usize) -> SchemeSpec {
        SchemeSpec {
            kind: self.kind,
            delta: self.delta,
            rate: self.rate,
            epsilon: self.epsilon,
            lambda: self.lambda,
            dimension,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JModeConfig {
    /// `J ≡ 1`.
    #[default]
    Unit,
    /// The solved J-system.
    Exact,
    /// The closed-form lower bound.
    Formula,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JConfig {
    pub mode: JModeConfig,
    /// Radius `r` of the ball `B(O, r)` carrying the J-system.
    pub radius: f64,
    /// Solve on the whole manifold instead of the ball (closed manifolds only).
    pub whole: bool,
    /// Exponent `p` of the integral curvature, `p > n/2`.
    pub p: f64,
    /// Stride of the curvature centers.
    pub stride: usize,
}

impl Default for JConfig {
    fn default() -> Self {
        JConfig {
            mode: JModeConfig::Unit,
            radius: 1.0,
            whole: false,
            p: 2.0,
            stride: 4,
        }
    }
}

/// Overrides and calibration switches for the unspecified constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsConfig {
    /// `C(n,p)` of the damping bound.
    pub c: Option<f64>,
    pub c1: Option<f64>,
    /// Curvature bound `κ`; measured when absent.
    pub kappa: Option<f64>,
    pub calibrate_c: bool,
    pub calibrate_c1: bool,
    pub c_max: f64,
    pub c1_max: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig {
            c: None,
            c1: None,
            kappa: None,
            calibrate_c: false,
            calibrate_c1: false,
            c_max: 1e3,
            c1_max: C1_MAX,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    /// Coordinates of `O`; the grid center when absent.
    pub origin: Option<Vec<f64>>,
    pub radius: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig {
            origin: None,
            radius: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Conditions,
    Sandwich,
    Gradient,
    #[serde(alias = "lemma14")]
    Lemma,
    Harnack,
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Conditions => "conditions",
            CheckKind::Sandwich => "sandwich",
            CheckKind::Gradient => "gradient",
            CheckKind::Lemma => "lemma",
            CheckKind::Harnack => "harnack",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksConfig {
    pub enabled: Vec<CheckKind>,
    pub lemma_form: LemmaForm,
    pub harnack: PairSampling,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            enabled: vec![CheckKind::Conditions, CheckKind::Gradient, CheckKind::Harnack],
            lemma_form: LemmaForm::default(),
            harnack: PairSampling::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative slack on the gradient bound, on top of the discretization tolerance.
    pub gradient_rel: f64,
    /// Allowed overshoot of `J` above 1.
    pub sandwich_upper: f64,
    pub condition_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gradient_rel: 0.0,
            sandwich_upper: 1e-10,
            condition_samples: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub plot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            plot: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn scheme_spec(&self) -> SchemeSpec {
        self.scheme.to_spec(self.manifold.dimension())
    }

    /// Checks that need no solve: ranges, the scheme's ε interval and the time window.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.scheme_spec().validate()?;
        let t = &self.time;
        if !(t.horizon > 0.0) {
            return bad(format!("horizon T = {} must be positive", t.horizon));
        }
        if let Some(t0) = t.t0 {
            if !(t0 > 0.0 && t0 < t.horizon) {
                return bad(format!("need T > t₀ > 0, got t₀ = {t0}, T = {}", t.horizon));
            }
        }
        if let Some(dt) = t.dt {
            if !(dt > 0.0) {
                return bad(format!("dt = {dt} must be positive"));
            }
        }
        if !(t.cfl_fraction > 0.0 && t.cfl_fraction <= 1.0) {
            return bad(format!("cfl_fraction = {} must lie in (0, 1]", t.cfl_fraction));
        }
        if t.store_every == 0 {
            return bad("store_every must be at least 1".into());
        }
        if !(self.region.radius > 0.0) {
            return bad(format!("region radius {} must be positive", self.region.radius));
        }
        let n = self.manifold.dimension();
        if let Some(o) = &self.region.origin {
            if o.len() != n {
                return bad(format!("origin has {} coordinates, manifold dimension is {n}", o.len()));
            }
        }
        if !(self.j.radius > 0.0) {
            return bad(format!("J ball radius {} must be positive", self.j.radius));
        }
        if !(2.0 * self.j.p > n as f64) {
            return bad(format!("p = {} must exceed n/2 = {}", self.j.p, n as f64 / 2.0));
        }
        let tol = &self.tolerances;
        if !(tol.gradient_rel >= 0.0 && tol.sandwich_upper > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if tol.condition_samples < 2 {
            return bad("condition_samples must be at least 2".into());
        }
        let c = &self.constants;
        for (name, v) in [("c", c.c), ("c1", c.c1), ("kappa", c.kappa)] {
            if let Some(v) = v {
                if !(v >= 0.0) || (name != "kappa" && v == 0.0) {
                    return bad(format!("constant {name} = {v} out of range"));
                }
            }
        }
        if c.calibrate_c && c.c.is_some() {
            return bad("constants.c and constants.calibrate_c are exclusive".into());
        }
        if c.calibrate_c1 && c.c1.is_some() {
            return bad("constants.c1 and constants.calibrate_c1 are exclusive".into());
        }
        if let InitialData::HeatKernel { tau, center, .. } = &self.initial {
            if !(*tau > 0.0) {
                return bad(format!("heat kernel τ = {tau} must be positive"));
            }
            if center.as_ref().is_some_and(|c| c.len() != n) {
                return bad("heat kernel center has the wrong dimension".into());
            }
        }
        if self.checks.harnack.seed != 0 {
            return bad("set the pair sampling seed with the top-level `seed`".into());
        }
        let mut seen = self.checks.enabled.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.checks.enabled.len() {
            return bad("a check is listed twice".into());
        }
        Ok(())
    }

    /// Uniform refinement by `factor`: spacing `/factor`, explicit `dt` and stored spacing
    /// adjusted so that stored times stay the same.
    pub fn refined(&self, factor: usize) -> ExperimentConfig {
        let mut cfg = self.clone();
        if factor <= 1 {
            return cfg;
        }
        cfg.manifold = self.manifold.refined(factor);
        let f2 = factor * factor;
        if let Some(dt) = cfg.time.dt {
            cfg.time.dt = Some(dt / f2 as f64);
        }
        cfg.time.store_every *= f2;
        cfg
    }
}

/// Configurations shipped with the crate.
pub const PRESETS: [(&str, &str); 5] = [
    (
        "classical-liyau-baseline",
        include_str!("../presets/classical-liyau-baseline.toml"),
    ),
    ("hamilton-flat", include_str!("../presets/hamilton-flat.toml")),
    ("lixu-sphere", include_str!("../presets/lixu-sphere.toml")),
    ("nonlinear-warped", include_str!("../presets/nonlinear-warped.toml")),
    ("hyperbolic-sandwich", include_str!("../presets/hyperbolic-sandwich.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let text = preset_text(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown preset '{name}'; available: {}",
            preset_names().join(", ")
        ))
    })?;
    ExperimentConfig::from_toml_str(text)
}
