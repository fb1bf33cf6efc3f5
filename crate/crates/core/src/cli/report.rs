//! Flat `key: value` reports, written as text and as a JSON object.

use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::error::Result;

#[derive(Debug, Clone, Default)]
pub struct Report {
    entries: Vec<(String, Value)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert or replace `key`, keeping first-insertion order.
    pub fn set(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        let key = key.into();
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn set_f64(&mut self, key: impl Into<String>, v: f64) {
        self.set(key, Number::from_f64(v).map_or(Value::Null, Value::Number));
    }

    pub fn set_opt(&mut self, key: impl Into<String>, v: Option<f64>) {
        match v {
            Some(v) => self.set_f64(key, v),
            None => self.set(key, "skipped"),
        }
    }

    /// Values rendered by [`Report::to_text`] are parsed back: numbers, booleans, else strings.
    pub fn set_text(&mut self, key: impl Into<String>, v: &str) {
        if let Ok(b) = v.parse::<bool>() {
            self.set(key, b);
        } else if let Ok(x) = v.parse::<f64>() {
            self.set_f64(key, x);
        } else {
            self.set(key, v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let s = match v {
                Value::Number(n) if n.is_f64() => format!("{:.6e}", n.as_f64().unwrap_or(f64::NAN)),
                Value::String(s) => s.clone(),
                Value::Null => "nan".to_string(),
                other => other.to_string(),
            };
            out.push_str(k);
            out.push_str(": ");
            out.push_str(&s);
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let map: Map<String, Value> = self.entries.iter().cloned().collect();
        let mut s = serde_json::to_string_pretty(&Value::Object(map)).unwrap_or_default();
        s.push('\n');
        s
    }

    /// `report.txt` and `report.json` in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join("report.txt"), self.to_text())?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        Ok(())
    }
}
