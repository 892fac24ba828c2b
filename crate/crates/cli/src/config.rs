//! Experiment configuration: one JSON document per run, tagged by `scenario`.

use idt_core::constructions::{ConstructionSpec, PhiKernel, RadialMeasure};
use idt_core::measures::{DiscretePathMeasure, PathFunctional, ScalarLevyMeasure};
use idt_core::process_models::LevyTriplet;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Simulate,
    IdtTest,
    MimicTest,
    TsdTest,
    Spectral,
    TransformMeasure,
    PathMeasureCheck,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Simulate => "simulate",
            Scenario::IdtTest => "idt-test",
            Scenario::MimicTest => "mimic-test",
            Scenario::TsdTest => "tsd-test",
            Scenario::Spectral => "spectral",
            Scenario::TransformMeasure => "transform-measure",
            Scenario::PathMeasureCheck => "path-measure-check",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<String>,
    /// `csv` also writes the report flattened to `report.csv`.
    #[serde(default)]
    pub format: Format,
}

fn default_level() -> f64 {
    0.01
}

fn default_n() -> u32 {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub construction: ConstructionSpec,
    pub times: Vec<f64>,
    pub m: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdtTestConfig {
    pub construction: ConstructionSpec,
    #[serde(default = "default_n")]
    pub n: u32,
    pub times: Vec<f64>,
    /// Empty means the default probe set.
    #[serde(default)]
    pub probes: Vec<Vec<f64>>,
    pub m: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MimicMode {
    /// Each time separately against `exp(t ψ(z))`.
    #[default]
    Marginal,
    /// All times jointly against the Lévy process of the triplet.
    Joint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MimicTestConfig {
    pub construction: ConstructionSpec,
    pub triplet: LevyTriplet,
    pub times: Vec<f64>,
    #[serde(default)]
    pub mode: MimicMode,
    #[serde(default)]
    pub probes: Vec<Vec<f64>>,
    pub m: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TsdTestConfig {
    pub construction: ConstructionSpec,
    pub c: f64,
    pub times: Vec<f64>,
    #[serde(default)]
    pub probes: Vec<Vec<f64>>,
    pub m: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_ys() -> Vec<f64> {
    (0..=80).map(|k| -8.0 + 0.2 * k as f64).collect()
}

fn default_cov_times() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}

fn default_alphas() -> Vec<f64> {
    vec![0.5, 2.0, 3.0]
}

fn default_xs() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub phi: PhiKernel,
    /// Abscissae of the spectral density table.
    #[serde(default = "default_ys")]
    pub ys: Vec<f64>,
    /// Covariance is tabulated on all pairs of these times.
    #[serde(default = "default_cov_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_alphas")]
    pub scaling_factors: Vec<f64>,
    #[serde(default = "spectral_defaults::scaling_tol")]
    pub scaling_tol: f64,
    /// Points where the transform of the density is compared with the kernel side.
    #[serde(default = "default_xs")]
    pub fourier_points: Vec<f64>,
    #[serde(default = "spectral_defaults::fourier_tol")]
    pub fourier_tol: f64,
    #[serde(default = "spectral_defaults::hirsch_n")]
    pub hirsch_n: usize,
    #[serde(default = "spectral_defaults::hirsch_tol")]
    pub hirsch_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

mod spectral_defaults {
    pub fn scaling_tol() -> f64 {
        1e-6
    }
    pub fn fourier_tol() -> f64 {
        1e-4
    }
    pub fn hirsch_n() -> usize {
        64
    }
    pub fn hirsch_tol() -> f64 {
        1e-8
    }
}

fn default_mu() -> RadialMeasure {
    RadialMeasure::LogUniform { a: 0.0, b: 1.0 }
}

fn default_v_range() -> (f64, f64) {
    (0.1, 10.0)
}

fn default_points() -> usize {
    20
}

fn default_transform_tol() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformMeasureConfig {
    pub nu: ScalarLevyMeasure,
    /// Evaluation points; when empty, `points` log-spaced values on `v_range`.
    #[serde(default)]
    pub vs: Vec<f64>,
    #[serde(default = "default_v_range")]
    pub v_range: (f64, f64),
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_transform_tol")]
    pub tol: f64,
    /// Radial measure of the window check; `(du/u) 1_{[0,1]}` by default.
    #[serde(default = "default_mu")]
    pub mu: RadialMeasure,
    /// Optional `[a, b]`: mass of the transformed measure on the window, both ways.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftSpec {
    pub u_max: f64,
    pub cells: usize,
    pub horizon: f64,
}

fn default_ns() -> Vec<u32> {
    vec![2, 3]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathMeasureCheckConfig {
    pub measure: DiscretePathMeasure,
    #[serde(default)]
    pub lift: Option<LiftSpec>,
    #[serde(default = "default_ns")]
    pub n: Vec<u32>,
    pub functionals: Vec<PathFunctional>,
    /// Defaults to twice the u-cell width for lifted measures, `1e-9` otherwise.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Simulate(SimulateConfig),
    IdtTest(IdtTestConfig),
    MimicTest(MimicTestConfig),
    TsdTest(TsdTestConfig),
    Spectral(SpectralConfig),
    TransformMeasure(TransformMeasureConfig),
    PathMeasureCheck(PathMeasureCheckConfig),
}

impl ExperimentConfig {
    /// Parses `text` for `scenario`. The document may omit the `scenario`
    /// field; if present it must agree with the command line.
    pub fn parse(text: &str, scenario: Scenario) -> Result<(Self, Value), CliError> {
        let mut raw: Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let obj = raw.as_object_mut().ok_or_else(|| CliError::Config("config must be a JSON object".into()))?;
        match obj.get("scenario") {
            None => {
                obj.insert("scenario".into(), Value::String(scenario.name().into()));
            }
            Some(Value::String(s)) if s == scenario.name() => {}
            Some(other) => {
                return Err(CliError::Config(format!(
                    "config is for scenario {other} but {} was requested",
                    scenario.name()
                )))
            }
        }
        let cfg: Self = serde_json::from_value(raw.clone()).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok((cfg, raw))
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::Simulate(c) => c.seed,
            ExperimentConfig::IdtTest(c) => c.seed,
            ExperimentConfig::MimicTest(c) => c.seed,
            ExperimentConfig::TsdTest(c) => c.seed,
            ExperimentConfig::Spectral(c) => c.seed,
            ExperimentConfig::TransformMeasure(c) => c.seed,
            ExperimentConfig::PathMeasureCheck(c) => c.seed,
        }
    }

    pub fn output(&self) -> &OutputSpec {
        match self {
            ExperimentConfig::Simulate(c) => &c.output,
            ExperimentConfig::IdtTest(c) => &c.output,
            ExperimentConfig::MimicTest(c) => &c.output,
            ExperimentConfig::TsdTest(c) => &c.output,
            ExperimentConfig::Spectral(c) => &c.output,
            ExperimentConfig::TransformMeasure(c) => &c.output,
            ExperimentConfig::PathMeasureCheck(c) => &c.output,
        }
    }

    /// Checks that need no numerics; everything else is validated by the core
    /// constructors before any sampling starts.
    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let times_ok = |t: &[f64]| !t.is_empty() && t.iter().all(|x| x.is_finite() && *x >= 0.0);
        match self {
            ExperimentConfig::Simulate(c) => {
                if !times_ok(&c.times) {
                    return bad("times must be a nonempty list of nonnegative numbers".into());
                }
                if c.m == 0 {
                    return bad("m must be positive".into());
                }
            }
            ExperimentConfig::IdtTest(IdtTestConfig { times, level, .. })
            | ExperimentConfig::MimicTest(MimicTestConfig { times, level, .. })
            | ExperimentConfig::TsdTest(TsdTestConfig { times, level, .. }) => {
                if !times_ok(times) {
                    return bad("times must be a nonempty list of nonnegative numbers".into());
                }
                if !(*level > 0.0 && *level < 1.0) {
                    return bad(format!("level must lie in (0, 1), got {level}"));
                }
            }
            ExperimentConfig::Spectral(c) => {
                if c.times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                    return bad("covariance times must be positive".into());
                }
            }
            ExperimentConfig::TransformMeasure(c) => {
                if c.vs.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return bad("evaluation points must be positive".into());
                }
                let (lo, hi) = c.v_range;
                if c.vs.is_empty() && !(lo > 0.0 && hi >= lo && c.points >= 1) {
                    return bad(format!("v_range must satisfy 0 < lo <= hi, got ({lo}, {hi})"));
                }
            }
            ExperimentConfig::PathMeasureCheck(c) => {
                if c.n.is_empty() || c.n.contains(&0) {
                    return bad("n must be a nonempty list of positive integers".into());
                }
                if c.functionals.is_empty() {
                    return bad("at least one functional is needed".into());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_tag_is_optional_but_checked() {
        let text = r#"{"construction": {"kind": "besq1"}, "times": [1.0], "m": 200}"#;
        let (cfg, raw) = ExperimentConfig::parse(text, Scenario::IdtTest).unwrap();
        assert!(matches!(cfg, ExperimentConfig::IdtTest(IdtTestConfig { n: 2, .. })));
        assert_eq!(raw["scenario"], "idt-test");
        assert!(ExperimentConfig::parse(text, Scenario::Simulate).is_ok());
        let tagged = r#"{"scenario": "spectral", "phi": {"shape": {"kind": "power_tail_upper", "alpha": 1.0}}}"#;
        assert!(matches!(ExperimentConfig::parse(tagged, Scenario::IdtTest), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        for text in [
            r#"{"construction": {"kind": "besq1"}, "times": [1.0], "m": 200, "colour": 1}"#,
            r#"{"construction": {"kind": "besq1", "x": 1}, "times": [1.0], "m": 200}"#,
            r#"{"construction": {"kind": "levy", "triplet": {"drift": 0, "gaussian_var": 1, "jump_part": {"kind": "none", "q": 2}}}, "times": [1.0], "m": 200}"#,
            r#"{"construction": {"kind": "besq1"}, "times": [1.0], "m": 200, "output": {"path": "x", "fmt": "csv"}}"#,
        ] {
            assert!(matches!(ExperimentConfig::parse(text, Scenario::IdtTest), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn cheap_validation() {
        let text = r#"{"construction": {"kind": "besq1"}, "times": [], "m": 200}"#;
        assert!(ExperimentConfig::parse(text, Scenario::IdtTest).is_err());
        let text = r#"{"construction": {"kind": "besq1"}, "times": [1.0], "m": 200, "level": 1.5}"#;
        assert!(ExperimentConfig::parse(text, Scenario::IdtTest).is_err());
        assert!(ExperimentConfig::parse("[1]", Scenario::IdtTest).is_err());
    }
}
