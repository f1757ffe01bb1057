//! Experiment configuration files (JSON) and their schema.
//!
//! Groups, models and grids are declared once under a name and referenced by
//! experiments. Every object rejects unknown keys and every experiment
//! carries its own seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Relative paths resolve against the directory holding the config file.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub groups: BTreeMap<String, GroupConfig>,
    #[serde(default)]
    pub models: BTreeMap<String, ModelConfig>,
    #[serde(default)]
    pub grids: BTreeMap<String, GridConfig>,
    pub experiments: Vec<ExperimentConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupConfig {
    Heisenberg {
        #[serde(rename = "N")]
        n: usize,
        #[serde(default = "default_p")]
        p: f64,
        #[serde(default)]
        chart: Option<ChartConfig>,
    },
    Unipotent {
        n: usize,
        #[serde(default)]
        chart: Option<ChartConfig>,
    },
}

fn default_p() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    pub rho_prime: f64,
    pub rho_double_prime: f64,
    pub bracket_bound: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Ordered exponentials of one driver on the Lie algebra of `group`.
    Product { group: String, driver: DriverConfig },
    /// Closed-form Heisenberg process from horizontal and central drivers.
    Heisenberg {
        group: String,
        #[serde(default)]
        x: DriverConfig,
        #[serde(default)]
        y: DriverConfig,
        #[serde(default)]
        z: DriverConfig,
    },
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DriverConfig {
    #[serde(default)]
    pub drift: Option<Vec<f64>>,
    #[serde(default)]
    pub diffusion: Option<Diffusion>,
    #[serde(default)]
    pub jumps: Option<JumpsConfig>,
    #[serde(default)]
    pub time_scaling: Option<TimeScalingConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Diffusion {
    Isotropic(f64),
    PerCoordinate(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct JumpsConfig {
    pub intensity: f64,
    pub law: JumpLawConfig,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLawConfig {
    UniformOnBall { radius: f64 },
    Atom { value: Vec<f64> },
    Discrete { atoms: Vec<AtomConfig> },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub value: Vec<f64>,
    pub p: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TimeScalingConfig {
    pub breaks: Vec<f64>,
    pub rates: Vec<f64>,
}

/// Either a uniform grid (`t_end`, `cells`) or explicit `points`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub cells: Option<usize>,
    #[serde(default)]
    pub points: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub check: Check,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    KernelSuite(KernelSuite),
    BracketBound(BracketBound),
    BallPower(BallPower),
    AdditiveMoments(ModelGridTrials),
    SamplePath(SamplePath),
    Cocycle(Cocycle),
    Convergence(Convergence),
    OscillationExhaustive(OscillationExhaustive),
    OscillationAxioms(OscillationAxioms),
    MaximumOscillation(Lemma),
    LargestStep(Lemma),
    ExpectationBound(Lemma),
    ContinuityProbe(ContinuityProbe),
    DetectorFidelity(DetectorFidelity),
    PoissonBattery(PoissonBattery),
    RestartProbe(RestartProbe),
    StepCertification(StepCertification),
    StepTriangle(StepTriangle),
    GaugeTriangle(GaugeTriangle),
    BoundedJumps(BoundedJumps),
    ExpMoment(Moment),
    TailDecay(Moment),
    MetricModulus(MetricModulus),
}

impl Check {
    pub fn kind(&self) -> &'static str {
        match self {
            Check::KernelSuite(_) => "kernel_suite",
            Check::BracketBound(_) => "bracket_bound",
            Check::BallPower(_) => "ball_power",
            Check::AdditiveMoments(_) => "additive_moments",
            Check::SamplePath(_) => "sample_path",
            Check::Cocycle(_) => "cocycle",
            Check::Convergence(_) => "convergence",
            Check::OscillationExhaustive(_) => "oscillation_exhaustive",
            Check::OscillationAxioms(_) => "oscillation_axioms",
            Check::MaximumOscillation(_) => "maximum_oscillation",
            Check::LargestStep(_) => "largest_step",
            Check::ExpectationBound(_) => "expectation_bound",
            Check::ContinuityProbe(_) => "continuity_probe",
            Check::DetectorFidelity(_) => "detector_fidelity",
            Check::PoissonBattery(_) => "poisson_battery",
            Check::RestartProbe(_) => "restart_probe",
            Check::StepCertification(_) => "step_certification",
            Check::StepTriangle(_) => "step_triangle",
            Check::GaugeTriangle(_) => "gauge_triangle",
            Check::BoundedJumps(_) => "bounded_jumps",
            Check::ExpMoment(_) => "exp_moment",
            Check::TailDecay(_) => "tail_decay",
            Check::MetricModulus(_) => "metric_modulus",
        }
    }

    /// The parameter object alone, as written in reports.
    pub fn params(&self) -> serde_json::Value {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(map)) => map.into_iter().next().map(|(_, v)| v).unwrap_or_default(),
            _ => serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSuite {
    pub groups: Vec<String>,
    pub cases: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BracketBound {
    pub groups: Vec<String>,
    pub samples: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BallPower {
    pub group: String,
    pub delta: f64,
    pub powers: Vec<usize>,
    pub samples: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelGridTrials {
    pub model: String,
    pub grid: String,
    pub trials: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SamplePath {
    pub model: String,
    pub grid: String,
    #[serde(default)]
    pub trial: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// Ordered product of cell exponentials.
    #[default]
    Product,
    /// Closed form with the area term (Heisenberg models only).
    Exact,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Cocycle {
    pub model: String,
    pub grid: String,
    pub samples: usize,
    #[serde(default = "default_cocycle_tol")]
    pub tol: f64,
    #[serde(default)]
    pub construction: Construction,
    #[serde(default)]
    pub trial: u64,
    /// Overwrites one cached cell increment before checking.
    #[serde(default)]
    pub fault: Option<Fault>,
}

fn default_cocycle_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Fault {
    pub cell: usize,
    /// Added to the group coordinates of the cell increment.
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceExpectation {
    /// Every separated trial is exact on its separation level and beyond.
    Exact,
    /// Fitted log-log slope inside `[min, max]`.
    Slope { min: f64, max: f64 },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Convergence {
    pub model: String,
    /// Coarsest grid; it is refined dyadically.
    pub grid: String,
    pub refinements: usize,
    pub trials: usize,
    pub expect: ConvergenceExpectation,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OscillationExhaustive {
    pub model: String,
    pub t_end: f64,
    pub delta: f64,
    pub max_points: usize,
    pub instances: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OscillationAxioms {
    pub model: String,
    pub grid: String,
    pub delta: f64,
    pub instances: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma {
    pub model: String,
    pub grid: String,
    pub delta: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuityProbe {
    pub model: String,
    pub t_end: f64,
    pub cells: usize,
    pub delta: f64,
    pub alpha: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorFidelity {
    pub model: String,
    pub grid: String,
    pub epsilon: f64,
    pub trials: usize,
    #[serde(default = "one")]
    pub min_precision: f64,
    #[serde(default = "one")]
    pub min_recall: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonBattery {
    pub model: String,
    pub grid: String,
    pub epsilon: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RestartProbe {
    pub model: String,
    pub grid: String,
    pub epsilon: f64,
    pub h: f64,
    pub trials: usize,
    pub expect: Expectation,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StepCertification {
    pub group: String,
    pub delta: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StepTriangle {
    pub group: String,
    pub delta: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeTriangle {
    pub group: String,
    pub triples: usize,
    /// Opt-in word-scaled metric for groups without a closed-form gauge.
    #[serde(default)]
    pub fallback_delta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundedJumps {
    pub model: String,
    pub delta: f64,
    pub power: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Moment {
    pub model: String,
    pub grid: String,
    pub alpha: f64,
    pub delta: f64,
    pub jump_power: usize,
    pub trials: usize,
    /// Defaults to the whole grid.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MetricModulus {
    pub model: String,
    pub grid: String,
    pub alpha: f64,
    pub windows: Vec<f64>,
    pub trials: usize,
}

/// Parses a config from JSON text. `origin` labels diagnostics.
pub fn parse_config(text: &str, origin: &str) -> Result<Config, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let (line, column) = (inner.line(), inner.column());
        let full = inner.to_string();
        let message = full.strip_suffix(&format!(" at line {line} column {column}")).unwrap_or(&full).to_string();
        CliError::Schema { origin: origin.to_string(), path, line, column, message }
    })?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Unreadable { path: path.to_path_buf(), message: e.to_string() })?;
    parse_config(&text, &path.display().to_string())
}
