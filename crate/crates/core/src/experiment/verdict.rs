//! `KEY=VALUE` verdict blocks.

use std::fmt::Write as _;

pub const SKIPPED: &str = "SKIPPED";

/// Ordered key/value pairs. Keys of pipelines that did not run read `SKIPPED`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Verdict {
    entries: Vec<(String, String)>,
}

impl Verdict {
    /// All `keys` present and marked skipped.
    pub fn skeleton(keys: &[&str]) -> Self {
        Self { entries: keys.iter().map(|k| (k.to_string(), SKIPPED.to_string())).collect() }
    }

    /// Sets `key`, appending it when absent.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn num(&mut self, key: &str, value: f64) {
        self.set(key, fmt_f64(value));
    }

    pub fn flag(&mut self, key: &str, value: bool) {
        self.set(key, yes_no(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Self { entries }
    }
}

pub fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Shortest round-trip representation, so printed values compare exactly
/// against the tolerances they were tested with.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_finite() && (1e-4..1e6).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
