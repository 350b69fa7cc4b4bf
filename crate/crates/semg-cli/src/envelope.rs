//! The JSON envelope every subcommand prints: config echo, metrics,
//! warnings, and the list of files written. Field order is fixed and maps
//! are sorted, so identical inputs produce byte-identical output.

use serde::Serialize;
use serde_json::{Map, Value};

use semg_core::base::LogBase;

#[derive(Debug, Serialize)]
pub struct ResultEnvelope {
    pub command: String,
    pub version: &'static str,
    pub log_base: String,
    pub config: Map<String, Value>,
    pub metrics: Map<String, Value>,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

impl ResultEnvelope {
    pub fn new(command: &str, base: LogBase) -> Self {
        ResultEnvelope {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            log_base: match base {
                LogBase::Bits => "2".to_string(),
                LogBase::Nats => "e".to_string(),
            },
            config: Map::new(),
            metrics: Map::new(),
            warnings: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub(crate) fn json_number(x: f64) -> Value {
        match serde_json::Number::from_f64(x) {
            Some(n) => Value::Number(n),
            // JSON has no infinities; keep them readable.
            None => Value::String(crate::formats::fmt_float(x)),
        }
    }

    pub fn config_str(&mut self, key: &str, value: impl ToString) {
        self.config
            .insert(key.to_string(), Value::String(value.to_string()));
    }

    pub fn config_f64(&mut self, key: &str, value: f64) {
        self.config.insert(key.to_string(), Self::json_number(value));
    }

    pub fn config_u64(&mut self, key: &str, value: u64) {
        self.config.insert(key.to_string(), Value::from(value));
    }

    pub fn metric_f64(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), Self::json_number(value));
    }

    pub fn metric_u64(&mut self, key: &str, value: u64) {
        self.metrics.insert(key.to_string(), Value::from(value));
    }

    pub fn metric_bool(&mut self, key: &str, value: bool) {
        self.metrics.insert(key.to_string(), Value::from(value));
    }

    pub fn metric_value(&mut self, key: &str, value: Value) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn warn(&mut self, message: impl ToString) {
        self.warnings.push(message.to_string());
    }

    pub fn output(&mut self, path: &std::path::Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("envelope serializes");
        s.push('\n');
        s
    }
}

/// Vector of floats as a JSON array, infinities stringified.
pub fn float_array(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&x| ResultEnvelope::json_number(x)).collect())
}
