//! Batch experiment runner for `confheat-core`.
//!
//! A run reads a JSON config, applies `--set` overrides, validates the
//! result, dispatches to the library and renders a CSV table and a JSON
//! summary whose verdict decides the exit status.

pub mod config;
pub mod experiments;
pub mod params;
pub mod report;

use std::fmt;
use std::path::Path;

use serde_json::Value;

pub use confheat_core::Verdict;
pub use config::{apply_set, validate_config, validate_value, ExperimentConfig};
pub use report::{Rendered, Report};

/// Exit status of a run that finished with verdict pass.
pub const EXIT_PASS: i32 = 0;
/// Verdict fail or inconclusive.
pub const EXIT_VERDICT: i32 = 1;
/// Invalid config, invalid input or configuration error.
pub const EXIT_CONFIG: i32 = 2;
/// I/O, capacity and numerical failures.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug)]
pub enum Failure {
    Config(Vec<String>),
    Library(confheat_core::Error),
    Io(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        use confheat_core::Error as E;
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Library(E::InvalidInput(_) | E::Configuration(_)) => EXIT_CONFIG,
            Failure::Library(_) | Failure::Io(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(errors) => {
                write!(
                    f,
                    "invalid config ({} problem{}):",
                    errors.len(),
                    if errors.len() == 1 { "" } else { "s" }
                )?;
                for e in errors {
                    write!(f, "\n  {e}")?;
                }
                Ok(())
            }
            Failure::Library(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for Failure {}

/// Command-line overrides of a config document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<u64>,
    pub output: Option<String>,
    pub set: Vec<String>,
}

/// Parses `text` and applies the overrides; flags win over the file.
pub fn resolve(text: &str, ov: &Overrides) -> Result<ExperimentConfig, Failure> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| Failure::Config(vec![format!("syntax error: {e}")]))?;
    let mut errors = Vec::new();
    for s in &ov.set {
        if let Err(e) = apply_set(&mut doc, s) {
            errors.push(e);
        }
    }
    if let Value::Object(top) = &mut doc {
        if let Some(seed) = ov.seed {
            top.insert("seed".into(), Value::from(seed));
        }
        if let Some(r) = ov.replicas {
            top.insert("replicas".into(), Value::from(r));
        }
        if let Some(o) = &ov.output {
            top.insert("output".into(), Value::String(o.clone()));
        }
    }
    match validate_value(doc) {
        Ok(cfg) if errors.is_empty() => Ok(cfg),
        Ok(_) => Err(Failure::Config(errors)),
        Err(mut e) => {
            errors.append(&mut e);
            Err(Failure::Config(errors))
        }
    }
}

pub fn resolve_file(path: &Path, ov: &Overrides) -> Result<ExperimentConfig, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Io(anyhow::anyhow!("reading {}: {e}", path.display())))?;
    resolve(&text, ov)
}

/// Runs the experiment on a pool of `threads` workers (rayon's default
/// when `None`) and renders the report. Output bytes do not depend on the
/// thread count.
pub fn execute(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<(Report, Rendered), Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure::Io(e.into()))?;
    let report = pool
        .install(|| experiments::run_experiment(cfg))
        .map_err(Failure::Library)?;
    let rendered = report::render(&report, cfg.to_json()).map_err(Failure::Io)?;
    Ok((report, rendered))
}

/// `execute` plus writing the files under the configured prefix.
pub fn run_and_write(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Verdict, Failure> {
    let (report, rendered) = execute(cfg, threads)?;
    report::write_outputs(&cfg.output, &rendered).map_err(Failure::Io)?;
    Ok(report.verdict)
}

pub fn exit_code(verdict: Verdict) -> i32 {
    if verdict.is_pass() {
        EXIT_PASS
    } else {
        EXIT_VERDICT
    }
}
