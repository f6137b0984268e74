//! Line-oriented result files.
//!
//! ```text
//! # free-form header comment
//! [section]
//! key = value
//! ```
//!
//! Keys are unique within a section; sections may repeat. Floating-point
//! values are written with Rust's shortest round-trip formatting, so a
//! written file parses back to identical numbers.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Section {
    pub name: String,
    entries: Vec<(String, String)>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Section { name: name.into(), entries: Vec::new() }
    }

    /// Appends or replaces `key`.
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Validation {
            what: "record",
            reason: format!("section [{}] lacks `{key}`", self.name),
        })
    }

    pub fn parse_value<V: FromStr>(&self, key: &str) -> Result<V> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| Error::Validation {
            what: "record",
            reason: format!("section [{}]: cannot parse `{key} = {raw}`", self.name),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record {
    pub header: Vec<String>,
    pub sections: Vec<Section>,
}

impl Record {
    pub fn new() -> Self {
        Record::default()
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.header.push(line.into());
        self
    }

    pub fn push(&mut self, section: Section) -> &mut Self {
        self.sections.push(section);
        self
    }

    pub fn sections_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Section> + 'a {
        self.sections.iter().filter(move |s| s.name == name)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut record = Record::new();
        let mut current: Option<Section> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if current.is_none() {
                    record.header.push(comment.trim_start().to_string());
                }
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if name.trim().is_empty() {
                    return Err(Error::Parse { line: line_no, message: "empty section name".into() });
                }
                record.sections.extend(current.take());
                current = Some(Section::new(name.trim()));
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse { line: line_no, message: format!("expected `key = value`, got `{line}`") });
            };
            let key = key.trim();
            let Some(section) = current.as_mut() else {
                return Err(Error::Parse { line: line_no, message: format!("`{key}` appears before any section") });
            };
            if key.is_empty() {
                return Err(Error::Parse { line: line_no, message: "empty key".into() });
            }
            if section.get(key).is_some() {
                return Err(Error::Parse { line: line_no, message: format!("duplicate key `{key}`") });
            }
            section.set(key, value.trim());
        }
        record.sections.extend(current);
        Ok(record)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in &self.header {
            let _ = writeln!(out, "# {line}");
        }
        for (i, section) in self.sections.iter().enumerate() {
            if i > 0 || !self.header.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "[{}]", section.name);
            for (k, v) in &section.entries {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }
}

/// Space-separated list of numbers.
pub fn join_numbers(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn split_numbers(text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Validation { what: "record", reason: format!("`{t}` is not a number") }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut r = Record::new();
        r.comment("dimwitness simulate");
        r.push(Section::new("run").with("seed", 7).with("value", 0.1 + 0.2));
        r.push(Section::new("result").with("d", 5.656854249492381).with("tiny", 1e-300));
        let text = r.to_text();
        let back = Record::parse(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.sections[0].parse_value::<f64>("value").unwrap(), 0.1 + 0.2);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert_eq!(
            Record::parse("a = 1\n").unwrap_err(),
            Error::Parse { line: 1, message: "`a` appears before any section".into() }
        );
        assert!(matches!(Record::parse("[s]\nnot a pair\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(Record::parse("[s]\na = 1\na = 2\n"), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn numbers_lists() {
        let v = vec![1.5, -0.25, 3e-12];
        assert_eq!(split_numbers(&join_numbers(&v)).unwrap(), v);
    }
}
