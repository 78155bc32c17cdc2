use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Hash of the run configuration, vocabulary and seed.
pub fn fingerprint(config_text: &str, vocab_hash: &str, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(config_text.as_bytes());
    h.update(b"\0");
    h.update(vocab_hash.as_bytes());
    h.update(b"\0");
    h.update(seed.to_le_bytes());
    hex::encode(h.finalize())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    /// `all` or an emotion name.
    pub scope: String,
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub task: String,
    pub fingerprint: String,
    pub notes: Vec<String>,
    pub metrics: Vec<Metric>,
}

impl EvalReport {
    pub fn new(task: impl Into<String>, fingerprint: impl Into<String>) -> Self {
        EvalReport {
            task: task.into(),
            fingerprint: fingerprint.into(),
            notes: Vec::new(),
            metrics: Vec::new(),
        }
    }

    /// Pearson values must lie in `[-1, 1]`, everything else in `[0, 1]`.
    pub fn push(&mut self, scope: &str, name: &str, value: f64) -> Result<()> {
        let lo = if name == "pearson" { -1.0 } else { 0.0 };
        if !(lo..=1.0).contains(&value) {
            return Err(Error::contract(format!("{name} = {value} is out of range")));
        }
        self.metrics.push(Metric {
            scope: scope.to_string(),
            name: name.to_string(),
            value,
        });
        Ok(())
    }

    pub fn get(&self, scope: &str, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.scope == scope && m.name == name).map(|m| m.value)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "task: {}", self.task);
        let _ = writeln!(s, "fingerprint: {}", self.fingerprint);
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        let width = self.metrics.iter().map(|m| m.scope.len() + m.name.len() + 1).max().unwrap_or(0);
        for m in &self.metrics {
            let key = format!("{}.{}", m.scope, m.name);
            let _ = writeln!(s, "{key:<width$}  {:.4}", m.value);
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# task={} fingerprint={}\nscope,metric,value\n", self.task, self.fingerprint);
        for m in &self.metrics {
            let _ = writeln!(s, "{},{},{}", m.scope, m.name, m.value);
        }
        s
    }
}
