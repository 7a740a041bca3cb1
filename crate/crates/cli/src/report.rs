//! Human-readable `key: value` result documents for the solve command.

use std::fmt::Write as _;

/// Ordered `key: value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.17e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn text(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    pub fn number(&mut self, key: &str, value: f64) -> &mut Self {
        self.text(key, fmt_f64(value))
    }

    pub fn count(&mut self, key: &str, value: usize) -> &mut Self {
        self.text(key, value.to_string())
    }

    pub fn vector(&mut self, key: &str, values: &[f64]) -> &mut Self {
        let items: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
        self.text(key, format!("[{}]", items.join(", ")))
    }

    pub fn bits(&mut self, key: &str, values: &[bool]) -> &mut Self {
        let items: Vec<&str> = values.iter().map(|b| if *b { "1" } else { "0" }).collect();
        self.text(key, format!("[{}]", items.join(", ")))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            writeln!(out, "{k}: {v}").expect("writing to a String cannot fail");
        }
        out
    }
}

/// Parses a rendered document back into `(key, value)` pairs.
pub fn parse_report(text: &str) -> Vec<(String, String)> {
    text.lines().filter_map(|l| l.split_once(": ")).map(|(k, v)| (k.to_string(), v.to_string())).collect()
}
