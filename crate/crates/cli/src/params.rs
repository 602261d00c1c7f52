//! Error-accumulating reader for the `params` object of a config.

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

/// Range constraint on a numeric parameter.
#[derive(Debug, Clone, Copy)]
pub enum Check {
    Any,
    Positive,
    NonNegative,
    /// Open interval.
    Between(f64, f64),
}

impl Check {
    fn test(self, v: f64) -> Option<String> {
        match self {
            _ if !v.is_finite() => Some(format!("must be finite, got {v}")),
            Check::Any => None,
            Check::Positive if v <= 0.0 => Some(format!("must be positive, got {v}")),
            Check::NonNegative if v < 0.0 => Some(format!("must be nonnegative, got {v}")),
            Check::Between(lo, hi) if !(v > lo && v < hi) => Some(format!("must lie in ({lo}, {hi}), got {v}")),
            _ => None,
        }
    }
}

/// Reads typed parameters, applies defaults, records the resolved values
/// and collects every problem instead of stopping at the first one.
pub struct ParamReader<'a> {
    src: Map<String, Value>,
    resolved: Map<String, Value>,
    errors: &'a mut Vec<String>,
}

impl<'a> ParamReader<'a> {
    pub fn new(src: Map<String, Value>, errors: &'a mut Vec<String>) -> Self {
        Self {
            src,
            resolved: Map::new(),
            errors,
        }
    }

    /// Records a problem with `params.KEY`.
    pub fn error(&mut self, key: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("params.{key}: {msg}"));
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        match self.src.remove(key) {
            Some(Value::Null) | None => None,
            Some(v) => Some(v),
        }
    }

    pub fn real(&mut self, key: &str, default: f64, check: Check) -> f64 {
        let v = match self.take(key) {
            None => default,
            Some(v) => match parse_real(&v) {
                Some(x) => x,
                None => {
                    self.error(key, format!("expected a number, got {v}"));
                    default
                }
            },
        };
        if let Some(msg) = check.test(v) {
            self.error(key, msg);
            return default;
        }
        self.resolved.insert(key.into(), real_value(v));
        v
    }

    pub fn opt_real(&mut self, key: &str, check: Check) -> Option<f64> {
        let v = self.take(key)?;
        let x = match parse_real(&v) {
            Some(x) => x,
            None => {
                self.error(key, format!("expected a number or null, got {v}"));
                self.resolved.insert(key.into(), Value::Null);
                return None;
            }
        };
        if let Some(msg) = check.test(x) {
            self.error(key, msg);
        }
        self.resolved.insert(key.into(), real_value(x));
        Some(x)
    }

    pub fn int(&mut self, key: &str, default: u64, min: u64, max: u64) -> u64 {
        let v = match self.take(key) {
            None => default,
            Some(v) => match v.as_u64() {
                Some(x) => x,
                None => {
                    self.error(key, format!("expected a nonnegative integer, got {v}"));
                    default
                }
            },
        };
        if v < min || v > max {
            self.error(key, format!("must lie in [{min}, {max}], got {v}"));
            return default;
        }
        self.resolved.insert(key.into(), Value::from(v));
        v
    }

    pub fn boolean(&mut self, key: &str, default: bool) -> bool {
        let v = match self.take(key) {
            None => default,
            Some(Value::Bool(b)) => b,
            Some(v) => {
                self.error(key, format!("expected true or false, got {v}"));
                default
            }
        };
        self.resolved.insert(key.into(), Value::Bool(v));
        v
    }

    pub fn choice(&mut self, key: &str, default: &str, options: &[&str]) -> String {
        let v = match self.take(key) {
            None => default.to_string(),
            Some(Value::String(s)) if options.contains(&s.as_str()) => s,
            Some(v) => {
                self.error(key, format!("expected one of {options:?}, got {v}"));
                default.to_string()
            }
        };
        self.resolved.insert(key.into(), Value::String(v.clone()));
        v
    }

    pub fn real_list(&mut self, key: &str, default: &[f64], check: Check) -> Vec<f64> {
        let v = match self.take(key) {
            None => default.to_vec(),
            Some(Value::Array(items)) => {
                let parsed: Option<Vec<f64>> = items.iter().map(parse_real).collect();
                match parsed {
                    Some(p) => p,
                    None => {
                        self.error(key, "expected an array of numbers");
                        default.to_vec()
                    }
                }
            }
            Some(v) => {
                self.error(key, format!("expected an array of numbers, got {v}"));
                default.to_vec()
            }
        };
        for x in &v {
            if let Some(msg) = check.test(*x) {
                self.error(key, format!("entry {msg}"));
                break;
            }
        }
        self.resolved
            .insert(key.into(), Value::Array(v.iter().map(|x| real_value(*x)).collect()));
        v
    }

    pub fn point(&mut self, key: &str, dim: usize, default: Vec<f64>) -> Vec<f64> {
        let p = self.real_list(key, &default, Check::Any);
        if p.len() != dim {
            self.error(key, format!("expected {dim} coordinates, got {}", p.len()));
            return vec![0.0; dim];
        }
        p
    }

    pub fn points(&mut self, key: &str, dim: usize, default: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        let v = match self.take(key) {
            None => default,
            Some(v) => match serde_json::from_value::<Vec<Vec<f64>>>(v.clone()) {
                Ok(p) => p,
                Err(_) => {
                    self.error(key, "expected an array of coordinate arrays");
                    Vec::new()
                }
            },
        };
        if let Some(bad) = v.iter().find(|p| p.len() != dim || p.iter().any(|x| !x.is_finite())) {
            self.error(key, format!("point {bad:?} does not have {dim} finite coordinates"));
            return Vec::new();
        }
        self.resolved
            .insert(key.into(), serde_json::to_value(&v).expect("points serialize"));
        v
    }

    /// A structured parameter decoded by serde; `None` on error or when
    /// absent without default.
    pub fn object<T: DeserializeOwned + serde::Serialize>(&mut self, key: &str, default: Option<Value>) -> Option<T> {
        let v = self.take(key).or(default)?;
        match serde_json::from_value::<T>(v.clone()) {
            Ok(t) => {
                self.resolved.insert(key.into(), v);
                Some(t)
            }
            Err(e) => {
                self.error(key, e);
                None
            }
        }
    }

    /// Reports keys that no reader consumed and returns the resolved map.
    pub fn finish(self) -> Map<String, Value> {
        for k in self.src.keys() {
            self.errors.push(format!("params.{k}: unknown parameter"));
        }
        self.resolved
    }
}

/// Numbers, or the strings "inf", "-inf" for infinities.
pub fn parse_real(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => match s.as_str() {
            "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
            "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
            _ => None,
        },
        _ => None,
    }
}

/// JSON value for a real; non-finite values become strings.
pub fn real_value(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::String("nan".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}
