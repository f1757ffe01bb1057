//! Batch driver for `lieproc-core`: reads a JSON experiment config, runs the
//! listed experiments in order and writes one versioned JSON report per
//! experiment (plus CSV tables where useful) and a `summary.json`.
//!
//! Report bytes depend only on the config, the seeds and the crate version;
//! the thread count never changes them.

pub mod catalog;
pub mod config;
pub mod error;
pub mod resolve;
pub mod runner;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::{json, Value};

use lieproc_core::verdict::Verdict;

pub use config::{load_config, parse_config, Config};
pub use error::{CliError, EXIT_CONFIG, EXIT_FAIL, EXIT_OK, EXIT_RUNTIME};
use resolve::Context;

pub const SCHEMA_VERSION: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_OUTPUT_DIR: &str = "reports";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Treat inconclusive results as failures.
    pub strict: bool,
    /// Worker threads; `None` uses the rayon default.
    pub jobs: Option<usize>,
    /// Overrides `output_dir` from the config.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    Error,
}

impl From<Verdict> for Status {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Pass => Status::Pass,
            Verdict::Fail => Status::Fail,
            Verdict::Inconclusive => Status::Inconclusive,
        }
    }
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::Error => "ERROR",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: String,
    pub kind: &'static str,
    pub module: &'static str,
    pub status: Status,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    /// The full report as written to `<name>.json`.
    pub report: Value,
    pub elapsed: Duration,
}

impl Outcome {
    /// The core result object of the report.
    pub fn result(&self) -> &Value {
        &self.report["result"]
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub outcomes: Vec<Outcome>,
    pub output_dir: PathBuf,
    pub exit_code: i32,
}

pub fn exit_code(outcomes: &[Outcome], strict: bool) -> i32 {
    let has = |s: Status| outcomes.iter().any(|o| o.status == s);
    if has(Status::Error) {
        EXIT_RUNTIME
    } else if has(Status::Fail) || (strict && has(Status::Inconclusive)) {
        EXIT_FAIL
    } else {
        EXIT_OK
    }
}

fn overall(outcomes: &[Outcome]) -> Status {
    let has = |s: Status| outcomes.iter().any(|o| o.status == s);
    [Status::Error, Status::Fail, Status::Inconclusive].into_iter().find(|s| has(*s)).unwrap_or(Status::Pass)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Output { path: path.to_path_buf(), message: e.to_string() })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialise");
    s.push('\n');
    s
}

fn run_one(ctx: &Context, e: &config::ExperimentConfig) -> (Outcome, Vec<(String, String)>) {
    let kind = e.check.kind();
    let start = Instant::now();
    let done = runner::execute(ctx, e);
    let elapsed = start.elapsed();
    let (status, warnings, error, result, tables) = match done {
        Ok(d) => (Status::from(d.verdict), d.warnings, None, d.result, d.tables),
        Err(err) => (Status::Error, Vec::new(), Some(err.to_string()), Value::Null, Vec::new()),
    };
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "version": VERSION,
        "name": e.name,
        "kind": kind,
        "module": catalog::module_of(kind),
        "seed": e.seed,
        "params": e.check.params(),
        "status": status,
        "warnings": warnings,
        "error": error,
        "result": result,
    });
    let outcome = Outcome {
        name: e.name.clone(),
        kind,
        module: catalog::module_of(kind),
        status,
        warnings,
        error,
        report,
        elapsed,
    };
    (outcome, tables)
}

/// Runs every experiment of `config` in order, writing reports as they
/// finish and calling `progress` after each one. `base_dir` anchors a
/// relative `output_dir`.
pub fn run_config_with(
    config: &Config,
    base_dir: &Path,
    opts: &RunOptions,
    mut progress: impl FnMut(&Outcome),
) -> Result<RunSummary, CliError> {
    let ctx = Context::build(config)?;
    let output_dir = match (&opts.out, &config.output_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(d)) if d.is_relative() => base_dir.join(d),
        (None, Some(d)) => d.clone(),
        (None, None) => base_dir.join(DEFAULT_OUTPUT_DIR),
    };
    std::fs::create_dir_all(&output_dir)
        .map_err(|e| CliError::Output { path: output_dir.clone(), message: e.to_string() })?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::Pool(e.to_string()))?;

    let mut outcomes = Vec::with_capacity(config.experiments.len());
    for e in &config.experiments {
        let (outcome, tables) = pool.install(|| run_one(&ctx, e));
        write(&output_dir.join(format!("{}.json", e.name)), &pretty(&outcome.report))?;
        for (suffix, csv) in tables {
            write(&output_dir.join(format!("{}.{suffix}.csv", e.name)), &csv)?;
        }
        progress(&outcome);
        outcomes.push(outcome);
    }
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "version": VERSION,
        "status": overall(&outcomes),
        "experiments": outcomes.iter().map(|o| json!({
            "name": o.name,
            "kind": o.kind,
            "module": o.module,
            "status": o.status,
            "warnings": o.warnings.len(),
        })).collect::<Vec<_>>(),
    });
    write(&output_dir.join("summary.json"), &pretty(&summary))?;
    let exit_code = exit_code(&outcomes, opts.strict);
    Ok(RunSummary { outcomes, output_dir, exit_code })
}

pub fn run_config(config: &Config, base_dir: &Path, opts: &RunOptions) -> Result<RunSummary, CliError> {
    run_config_with(config, base_dir, opts, |_| {})
}

/// Loads and runs a config file.
pub fn run_file(path: &Path, opts: &RunOptions, progress: impl FnMut(&Outcome)) -> Result<RunSummary, CliError> {
    let config = load_config(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    run_config_with(&config, &base, opts, progress)
}
