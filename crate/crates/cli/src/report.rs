//! Ordered `key=value` report. Rendering is byte-stable for identical input.

use std::fmt::Display;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    entries: Vec<(String, String)>,
}

impl RunReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn extend(&mut self, kv: impl IntoIterator<Item = (String, String)>) {
        self.entries.extend(kv);
    }

    /// Appends `prefix=value` lines parsed from an existing `key=value` block.
    pub fn extend_text(&mut self, text: &str) {
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                self.push(k, v);
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Every key ending in a probability suffix must hold a value in [0, 1].
    pub fn probabilities_in_range(&self) -> bool {
        self.entries
            .iter()
            .filter(|(k, _)| k.ends_with("success") || k.ends_with("probability"))
            .all(|(_, v)| v.parse::<f64>().is_ok_and(|p| (0.0..=1.0).contains(&p)))
    }
}
