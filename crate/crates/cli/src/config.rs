//! Experiment configuration documents: strict parsing, defaults,
//! command-line overrides.

use serde_json::{Map, Value};

use crate::experiments::{Common, Params};
use crate::params::{Check, ParamReader};

pub const EXPERIMENTS: [&str; 15] = [
    "sample-poisson",
    "diffuse",
    "semigroup-exp",
    "invariance",
    "generator",
    "feller",
    "rho",
    "flat-metric",
    "ktransform",
    "correlation",
    "permanent",
    "process",
    "oscillation",
    "collision",
    "tail-tau",
];

const TOP_LEVEL: [&str; 5] = ["experiment", "seed", "replicas", "output", "params"];
pub const DEFAULT_REPLICAS: u64 = 1000;
pub const MAX_REPLICAS: u64 = 1 << 32;

/// A fully resolved experiment: every default applied, every value checked.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub replicas: usize,
    pub output: String,
    pub common: Common,
    pub params: Params,
    /// Parameters as resolved, echoed into reports.
    pub resolved: Map<String, Value>,
}

impl ExperimentConfig {
    /// The effective configuration as a JSON document.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("experiment".into(), Value::String(self.experiment.clone()));
        m.insert("seed".into(), Value::from(self.seed));
        m.insert("replicas".into(), Value::from(self.replicas as u64));
        m.insert("output".into(), Value::String(self.output.clone()));
        m.insert("params".into(), Value::Object(self.resolved.clone()));
        Value::Object(m)
    }
}

/// Parses and validates a config document, reporting every problem found.
pub fn validate_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| vec![format!("syntax error: {e}")])?;
    validate_value(doc)
}

pub fn validate_value(doc: Value) -> Result<ExperimentConfig, Vec<String>> {
    let mut errors = Vec::new();
    let Value::Object(mut top) = doc else {
        return Err(vec!["config must be a JSON object".into()]);
    };
    for k in top.keys() {
        if !TOP_LEVEL.contains(&k.as_str()) {
            errors.push(format!("{k}: unknown key"));
        }
    }
    let experiment = match top.remove("experiment") {
        Some(Value::String(s)) if EXPERIMENTS.contains(&s.as_str()) => Some(s),
        Some(Value::String(s)) => {
            errors.push(format!(
                "experiment: unknown experiment {s:?}; expected one of {}",
                EXPERIMENTS.join(", ")
            ));
            None
        }
        Some(v) => {
            errors.push(format!("experiment: expected a string, got {v}"));
            None
        }
        None => {
            errors.push("experiment: missing".into());
            None
        }
    };
    let seed = match top.remove("seed") {
        None | Some(Value::Null) => 0,
        Some(v) => v.as_u64().unwrap_or_else(|| {
            errors.push(format!("seed: expected a 64-bit unsigned integer, got {v}"));
            0
        }),
    };
    let replicas = match top.remove("replicas") {
        None | Some(Value::Null) => DEFAULT_REPLICAS,
        Some(v) => match v.as_u64() {
            Some(r) if (1..=MAX_REPLICAS).contains(&r) => r,
            _ => {
                errors.push(format!("replicas: expected an integer in [1, {MAX_REPLICAS}], got {v}"));
                DEFAULT_REPLICAS
            }
        },
    };
    let output = match top.remove("output") {
        None | Some(Value::Null) => experiment
            .as_deref()
            .map(|e| format!("confheat-{e}"))
            .unwrap_or_default(),
        Some(Value::String(s)) if !s.is_empty() => s,
        Some(v) => {
            errors.push(format!("output: expected a nonempty path prefix, got {v}"));
            String::new()
        }
    };
    let params = match top.remove("params") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(m)) => m,
        Some(v) => {
            errors.push(format!("params: expected an object, got {v}"));
            Map::new()
        }
    };
    let Some(experiment) = experiment else {
        return Err(errors);
    };
    let mut reader = ParamReader::new(params, &mut errors);
    let common = Common {
        dt: reader.real("dt", 1e-3, Check::Positive),
        pad: reader.opt_real("pad", Check::NonNegative),
        i_max: reader.int("i_max", 20, 1, 64) as u32,
        n_max: reader.int("n_max", 20, 1, 1000) as u32,
    };
    let params = Params::parse(&experiment, &mut reader);
    let resolved = reader.finish();
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(ExperimentConfig {
        experiment,
        seed,
        replicas: replicas as usize,
        output,
        common,
        params,
        resolved,
    })
}

/// Applies `key=value` assignments to a config document. Keys are either
/// top-level (`seed`, `replicas`, `output`, `experiment`), `params.<name>`,
/// or a bare parameter name. Values are read as JSON when they parse,
/// otherwise as strings.
pub fn apply_set(doc: &mut Value, assignment: &str) -> Result<(), String> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("--set {assignment:?}: expected key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(format!("--set {assignment:?}: empty key"));
    }
    let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let Value::Object(top) = doc else {
        return Err("config must be a JSON object".into());
    };
    if TOP_LEVEL.contains(&key) && key != "params" {
        top.insert(key.to_string(), value);
        return Ok(());
    }
    let name = key.strip_prefix("params.").unwrap_or(key);
    let params = top.entry("params").or_insert_with(|| Value::Object(Map::new()));
    match params {
        Value::Object(m) => {
            m.insert(name.to_string(), value);
            Ok(())
        }
        _ => Err("params must be an object".into()),
    }
}
