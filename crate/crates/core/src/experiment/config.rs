//! Experiment configuration files.
//!
//! A config is a TOML document with a `[run]` section and one map section,
//! `[circle]` or `[torus]`, matching `run.kind`. Unknown keys are rejected.
//!
//! ```toml
//! [run]
//! kind = "circle"
//! pipelines = ["full-report"]
//!
//! [circle]
//! degree = 2
//! terms = [[1, 0.0795774715459477, 0.0]]   # [k, a, b]: a sin 2πkx + b cos 2πkx
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::circle::{CircleDiffeo, CircleLift, CircleMap, SmoothConjugate, TrigTerm};
use crate::error::Error as MathError;
use crate::torus::{ConjugateToral, IntAutomorphism, ToralMap, TorusDiffeo, TorusMap, TrigField, TrigMode};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid map: {0}")]
    Map(MathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Circle,
    Toral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Periodic,
    Density,
    Conjugacy,
    Entropy,
    FullReport,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub circle: Option<CircleSection>,
    pub torus: Option<TorusSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub kind: MapKind,
    #[serde(default = "default_pipelines")]
    pub pipelines: Vec<Pipeline>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; 0 uses the rayon default.
    #[serde(default)]
    pub threads: usize,
}

fn default_pipelines() -> Vec<Pipeline> {
    vec![Pipeline::FullReport]
}

fn default_seed() -> u64 {
    42
}

/// What a CLI subcommand asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    CircleReport,
    TorusReport,
    Only(Pipeline),
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::CircleReport => "circle-report",
            Task::TorusReport => "torus-report",
            Task::Only(Pipeline::Periodic) => "periodic",
            Task::Only(Pipeline::Density) => "density",
            Task::Only(Pipeline::Conjugacy) => "conjugacy",
            Task::Only(Pipeline::Entropy) => "entropy",
            Task::Only(Pipeline::FullReport) => "full-report",
        }
    }
}

fn kind_name(k: MapKind) -> &'static str {
    match k {
        MapKind::Circle => "circle",
        MapKind::Toral => "toral",
    }
}

/// Circle map `F(x) = d x + sum terms`, or with `conjugate = true` the model
/// `H o E_d o H^{-1}` where `H(x) = x + sum terms`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleSection {
    #[serde(default = "two")]
    pub degree: u32,
    #[serde(default)]
    pub terms: Vec<(u32, f64, f64)>,
    #[serde(default)]
    pub conjugate: bool,
    /// Periods `1..=periods` for the constant-data statistic.
    #[serde(default = "circle_periods")]
    pub periods: usize,
    #[serde(default = "bins")]
    pub bins: usize,
    #[serde(default = "density_iters")]
    pub density_iters: usize,
    #[serde(default = "residual_tol")]
    pub residual_tol: f64,
    /// Depth of the symbolic conjugacy.
    #[serde(default = "level")]
    pub level: usize,
    #[serde(default = "ode_steps")]
    pub ode_steps: usize,
    #[serde(default = "tol_cd")]
    pub tol_cd: f64,
}

/// Toral map `A x + epsilon p(x)`, or with `conjugate = true` the model
/// `H o A o H^{-1}` where `H(x) = x + epsilon p(x)`.
///
/// Modes are `[component, a, b, [k_1, ..., k_d]]` for
/// `a sin(2 pi k.x) + b cos(2 pi k.x)` added to `component`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusSection {
    pub matrix: Vec<Vec<i64>>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub modes: Vec<(usize, f64, f64, Vec<i32>)>,
    #[serde(default)]
    pub conjugate: bool,
    /// Require a real simple spectrum.
    #[serde(default)]
    pub simple_spectrum: bool,
    #[serde(default = "torus_periods")]
    pub periods: u32,
    #[serde(default = "cone_grid")]
    pub cone_grid: usize,
    #[serde(default = "franks_grid")]
    pub franks_grid: usize,
    #[serde(default = "franks_sweeps")]
    pub franks_sweeps: usize,
    /// Residual test grid; 0 means twice `franks_grid`.
    #[serde(default)]
    pub test_grid: usize,
    #[serde(default = "profile_grid")]
    pub profile_grid: usize,
    #[serde(default = "horizons")]
    pub horizons: Vec<usize>,
    #[serde(default = "segment_horizon")]
    pub segment_horizon: usize,
    #[serde(default = "cocycle_horizon")]
    pub cocycle_horizon: usize,
    #[serde(default = "srb_samples")]
    pub srb_samples: usize,
    #[serde(default = "srb_horizon")]
    pub srb_horizon: usize,
    #[serde(default = "srb_transient")]
    pub srb_transient: usize,
    #[serde(default)]
    pub base_point: Option<Vec<f64>>,
    #[serde(default = "tol_cd")]
    pub tol_cd: f64,
}

fn two() -> u32 {
    2
}
fn circle_periods() -> usize {
    8
}
fn bins() -> usize {
    4096
}
fn density_iters() -> usize {
    2000
}
fn residual_tol() -> f64 {
    1e-8
}
fn level() -> usize {
    12
}
fn ode_steps() -> usize {
    1 << 14
}
fn tol_cd() -> f64 {
    1e-6
}
fn torus_periods() -> u32 {
    6
}
fn cone_grid() -> usize {
    64
}
fn franks_grid() -> usize {
    512
}
fn franks_sweeps() -> usize {
    200
}
fn profile_grid() -> usize {
    64
}
fn horizons() -> Vec<usize> {
    vec![10, 20, 40, 80, 160]
}
fn segment_horizon() -> usize {
    25
}
fn cocycle_horizon() -> usize {
    200
}
fn srb_samples() -> usize {
    1000
}
fn srb_horizon() -> usize {
    1000
}
fn srb_transient() -> usize {
    100
}

fn check(ok: bool, what: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Invalid(what.to_string()))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check(!self.run.pipelines.is_empty(), "run.pipelines is empty")?;
        check(self.run.threads <= 1024, "run.threads must be at most 1024")?;
        match self.run.kind {
            MapKind::Circle => {
                check(self.torus.is_none(), "a circle run takes no [torus] section")?;
                let c = self.circle.as_ref().ok_or_else(|| ConfigError::Invalid("missing [circle] section".into()))?;
                check(c.degree >= 2 && c.degree <= 16, "circle.degree must be in 2..=16")?;
                check(c.terms.iter().all(|t| t.0 >= 1), "circle.terms wave numbers must be positive")?;
                check((1..=20).contains(&c.periods), "circle.periods must be in 1..=20")?;
                check(c.bins >= c.degree as usize && c.bins <= 1 << 20, "circle.bins must be in degree..=2^20")?;
                check(c.density_iters >= 1, "circle.density_iters must be positive")?;
                check(c.residual_tol > 0.0 && c.residual_tol < 1.0, "circle.residual_tol must be in (0, 1)")?;
                check((6..=24).contains(&c.level), "circle.level must be in 6..=24")?;
                check(c.ode_steps.is_power_of_two() && c.ode_steps >= 64, "circle.ode_steps must be a power of two >= 64")?;
                check(c.tol_cd > 0.0, "circle.tol_cd must be positive")?;
                check(
                    !self.run.pipelines.contains(&Pipeline::Entropy),
                    "the entropy pipeline applies to toral maps only",
                )?;
            }
            MapKind::Toral => {
                check(self.circle.is_none(), "a toral run takes no [circle] section")?;
                let t = self.torus.as_ref().ok_or_else(|| ConfigError::Invalid("missing [torus] section".into()))?;
                let d = t.matrix.len();
                check((2..=6).contains(&d), "torus.matrix must be d x d with d in 2..=6")?;
                check(t.matrix.iter().all(|r| r.len() == d), "torus.matrix must be square")?;
                check(t.modes.iter().all(|m| m.0 < d && m.3.len() == d), "torus.modes must be [component, a, b, [k_1..k_d]]")?;
                check(t.epsilon.is_finite(), "torus.epsilon must be finite")?;
                check((1..=12).contains(&t.periods), "torus.periods must be in 1..=12")?;
                check(t.cone_grid >= 2, "torus.cone_grid must be at least 2")?;
                check(t.franks_grid >= 4 && t.franks_grid <= 4096, "torus.franks_grid must be in 4..=4096")?;
                check(t.franks_sweeps >= 1, "torus.franks_sweeps must be positive")?;
                check(t.profile_grid >= 1, "torus.profile_grid must be positive")?;
                check(!t.horizons.is_empty() && t.horizons.iter().all(|h| *h >= 1), "torus.horizons must be positive")?;
                check(t.segment_horizon >= 1 && t.cocycle_horizon >= 1, "torus horizons must be positive")?;
                check(t.srb_samples >= 1 && t.srb_horizon >= 1, "torus.srb_* must be positive")?;
                check(t.base_point.as_ref().is_none_or(|p| p.len() == d), "torus.base_point must have d coordinates")?;
                check(t.tol_cd > 0.0, "torus.tol_cd must be positive")?;
                check(!self.run.pipelines.contains(&Pipeline::Density), "the density pipeline applies to circle maps only")?;
            }
        }
        Ok(())
    }

    /// Applies a CLI task and overrides, then revalidates.
    pub fn apply(&mut self, task: Task, seed: Option<u64>, threads: Option<usize>) -> Result<(), ConfigError> {
        match task {
            Task::CircleReport | Task::TorusReport => {
                let want = if task == Task::CircleReport { MapKind::Circle } else { MapKind::Toral };
                if self.run.kind != want {
                    return Err(ConfigError::Invalid(format!("{} needs run.kind = \"{}\"", task.name(), kind_name(want))));
                }
                self.run.pipelines = vec![Pipeline::FullReport];
            }
            Task::Only(p) => self.run.pipelines = vec![p],
        }
        if let Some(s) = seed {
            self.run.seed = s;
        }
        if let Some(t) = threads {
            self.run.threads = t;
        }
        self.validate()
    }

    pub fn wants(&self, p: Pipeline) -> bool {
        self.run.pipelines.contains(&p) || self.run.pipelines.contains(&Pipeline::FullReport)
    }
}

impl CircleSection {
    fn trig_terms(&self) -> Vec<TrigTerm> {
        self.terms.iter().map(|&(k, a, b)| TrigTerm::new(k, a, b)).collect()
    }

    /// The conjugacy `H` of a `conjugate = true` model.
    pub fn conjugacy(&self) -> Result<Option<CircleDiffeo>, ConfigError> {
        if !self.conjugate {
            return Ok(None);
        }
        CircleDiffeo::new(self.trig_terms()).map(Some).map_err(ConfigError::Map)
    }

    pub fn build(&self) -> Result<Box<dyn CircleMap>, ConfigError> {
        match self.conjugacy()? {
            Some(h) => Ok(Box::new(SmoothConjugate::new(self.degree, h).map_err(ConfigError::Map)?)),
            None => Ok(Box::new(CircleLift::new(self.degree, self.trig_terms()).map_err(ConfigError::Map)?)),
        }
    }
}

impl TorusSection {
    pub fn automorphism(&self) -> Result<IntAutomorphism, ConfigError> {
        let m = self.matrix.iter().map(|r| r.iter().map(|v| i128::from(*v)).collect()).collect();
        if self.simple_spectrum {
            IntAutomorphism::with_simple_spectrum(m)
        } else {
            IntAutomorphism::new(m)
        }
        .map_err(ConfigError::Map)
    }

    fn field(&self, d: usize, scale: f64) -> Result<TrigField, ConfigError> {
        let modes = self.modes.iter().map(|(c, x, y, k)| TrigMode::new(*c, k.clone(), scale * x, scale * y)).collect();
        TrigField::new(d, modes).map_err(ConfigError::Map)
    }

    /// The conjugacy `H` of a `conjugate = true` model.
    pub fn conjugacy(&self) -> Result<Option<TorusDiffeo>, ConfigError> {
        if !self.conjugate {
            return Ok(None);
        }
        let field = self.field(self.matrix.len(), self.epsilon)?;
        TorusDiffeo::new(field).map(Some).map_err(ConfigError::Map)
    }

    pub fn build(&self) -> Result<Box<dyn TorusMap>, ConfigError> {
        let a = self.automorphism()?;
        match self.conjugacy()? {
            Some(h) => Ok(Box::new(ConjugateToral::new(a, h).map_err(ConfigError::Map)?)),
            None => {
                let field = self.field(a.dim(), 1.0)?;
                Ok(Box::new(ToralMap::new(a, field, self.epsilon).map_err(ConfigError::Map)?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_defaults() {
        let c = ExperimentConfig::from_toml("[run]\nkind = \"circle\"\n[circle]\n").unwrap();
        assert_eq!(c.run.seed, 42);
        assert!(c.wants(Pipeline::Density));
        let circle = c.circle.unwrap();
        assert_eq!((circle.degree, circle.bins, circle.level), (2, 4096, 12));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_ranges() {
        assert!(matches!(ExperimentConfig::from_toml("[run]\nkind = \"circle\"\nfoo = 1\n[circle]\n"), Err(ConfigError::Parse(_))));
        assert!(matches!(ExperimentConfig::from_toml("[run]\nkind = \"circle\"\n[circle]\nbogus = 2\n"), Err(ConfigError::Parse(_))));
        assert!(matches!(ExperimentConfig::from_toml("[run]\nkind = \"circle\"\n[circle]\nlevel = 3\n"), Err(ConfigError::Invalid(_))));
        assert!(matches!(ExperimentConfig::from_toml("[run]\nkind = \"toral\"\n[circle]\n"), Err(ConfigError::Invalid(_))));
        assert!(matches!(
            ExperimentConfig::from_toml("[run]\nkind = \"circle\"\npipelines = [\"entropy\"]\n[circle]\n"),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn tasks_override_pipelines() {
        let mut c = ExperimentConfig::from_toml("[run]\nkind = \"circle\"\n[circle]\n").unwrap();
        c.apply(Task::Only(Pipeline::Density), Some(7), Some(2)).unwrap();
        assert_eq!(c.run.pipelines, vec![Pipeline::Density]);
        assert_eq!((c.run.seed, c.run.threads), (7, 2));
        assert!(!c.wants(Pipeline::Periodic));
        assert!(c.clone().apply(Task::TorusReport, None, None).is_err());
        assert!(c.clone().apply(Task::Only(Pipeline::Entropy), None, None).is_err());
        c.apply(Task::CircleReport, None, None).unwrap();
        assert!(c.wants(Pipeline::Conjugacy));
    }

    #[test]
    fn builds_toral_maps() {
        let text = r#"
[run]
kind = "toral"
pipelines = ["periodic"]
[torus]
matrix = [[2, 1], [1, 1]]
epsilon = 0.05
modes = [[0, 1.0, 0.0, [0, 1]]]
"#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        let f = c.torus.unwrap().build().unwrap();
        let y = f.lift(&[0.0, 0.25]);
        assert!((y[0] - (0.25 + 0.05)).abs() < 1e-12);
        assert!(!c.run.pipelines.contains(&Pipeline::Entropy));
    }

    #[test]
    fn invalid_matrix_is_a_map_error() {
        let text = "[run]\nkind = \"toral\"\n[torus]\nmatrix = [[1, 0], [0, 1]]\n";
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert!(matches!(c.torus.unwrap().build(), Err(ConfigError::Map(_))));
    }
}
