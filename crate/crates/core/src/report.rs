//! Machine-readable summary written next to every CLI output.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::io::atomic_write;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub parameters: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    pub wall_time_s: f64,
    pub converged: BTreeMap<String, bool>,
    pub metrics: BTreeMap<String, Value>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> Self {
        Self { command: command.into(), version: env!("CARGO_PKG_VERSION").to_string(), ..Self::default() }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.parameters.insert(key.to_string(), to_value(value));
        self
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.metrics.insert(key.to_string(), to_value(value));
        self
    }

    pub fn convergence(&mut self, key: &str, converged: bool) -> &mut Self {
        self.converged.insert(key.to_string(), converged);
        self
    }

    pub fn all_converged(&self) -> bool {
        self.converged.values().all(|&c| c)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are serializable");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_json().as_bytes())
    }
}

/// Non-finite floats become strings ("inf", "NaN") since JSON has no literal for them.
fn to_value(value: impl Serialize) -> Value {
    match serde_json::to_value(value) {
        Ok(v) => v,
        Err(e) => Value::String(e.to_string()),
    }
}

/// f64 for report fields, mapping non-finite values to strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::String(x.to_string())
    }
}
