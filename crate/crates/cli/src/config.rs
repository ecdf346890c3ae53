//! Sectioned `key = value` experiment files.
//!
//! ```text
//! [graph]
//! n = 2
//! edges = 0 1 1.0
//!
//! [law]
//! type = state_dependent
//! sigma = 0.5
//!
//! [sim]
//! horizon = 20
//!
//! [run]
//! x0 = 1, -1
//! output_dir = out
//! ```
//!
//! Lists are comma-separated; edge lists and matrix rows are separated by `;`.
//! `#` starts a comment.

use std::path::{Path, PathBuf};

use crate::CliError;

const SECTIONS: [&str; 6] = ["graph", "law", "sim", "run", "sweep", "linear_et"];

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parsed file before interpretation; keeps line numbers for error messages.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawConfig {
    sections: Vec<(String, Vec<Entry>)>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RawConfig::default();
        let mut current: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(CliError::config(name, "", format!("line {line}: unknown section [{name}]")));
                }
                if cfg.sections.iter().any(|(s, _)| s == name) {
                    return Err(CliError::config(name, "", format!("line {line}: section [{name}] repeated")));
                }
                cfg.sections.push((name.to_string(), Vec::new()));
                current = Some(cfg.sections.len() - 1);
                continue;
            }
            let Some(slot) = current else {
                return Err(CliError::config("", "", format!("line {line}: entry outside any section")));
            };
            let Some((key, value)) = content.split_once('=') else {
                return Err(CliError::config(&cfg.sections[slot].0, "", format!("line {line}: expected key = value")));
            };
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            let (section, entries) = &mut cfg.sections[slot];
            if entries.iter().any(|e| e.key == key) {
                return Err(CliError::config(section, &key, format!("line {line}: duplicate key")));
            }
            entries.push(Entry { key, value, line });
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("", "", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.sections.iter().any(|(s, _)| s == name)
    }

    pub fn section<'a>(&'a self, name: &'a str) -> Section<'a> {
        let entries = self.sections.iter().find(|(s, _)| s == name).map(|(_, e)| e.as_slice()).unwrap_or(&[]);
        Section { name, entries }
    }

    /// Sets `section.key`, adding the section or key if absent.
    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        let slot = match self.sections.iter().position(|(s, _)| s == section) {
            Some(i) => i,
            None => {
                self.sections.push((section.to_string(), Vec::new()));
                self.sections.len() - 1
            }
        };
        let entries = &mut self.sections[slot].1;
        match entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value.to_string(),
            None => entries.push(Entry { key: key.to_string(), value: value.to_string(), line: 0 }),
        }
    }

    pub fn remove(&mut self, section: &str, key: &str) {
        if let Some((_, entries)) = self.sections.iter_mut().find(|(s, _)| s == section) {
            entries.retain(|e| e.key != key);
        }
    }
}

/// Typed access to one section's entries.
#[derive(Debug, Clone, Copy)]
pub struct Section<'a> {
    name: &'a str,
    entries: &'a [Entry],
}

impl<'a> Section<'a> {
    pub fn name(&self) -> &str {
        self.name
    }

    pub fn entries(&self) -> &'a [Entry] {
        self.entries
    }

    pub fn raw(&self, key: &str) -> Option<&'a str> {
        self.entries.iter().find(|e| e.key == key).map(|e| e.value.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    pub fn err(&self, key: &str, msg: impl Into<String>) -> CliError {
        CliError::config(self.name, key, msg)
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<(), CliError> {
        for e in self.entries {
            if !allowed.contains(&e.key.as_str()) {
                return Err(self.err(&e.key, format!("line {}: unknown field", e.line)));
            }
        }
        Ok(())
    }

    pub fn require(&self, key: &str) -> Result<&'a str, CliError> {
        self.raw(key).ok_or_else(|| self.err(key, "missing"))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(key).map(|v| parse_f64(v).map_err(|m| self.err(key, m))).transpose()
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.raw(key)
            .map(|v| v.parse::<usize>().map_err(|_| self.err(key, format!("`{v}` is not a non-negative integer"))))
            .transpose()
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.raw(key)
            .map(|v| v.parse::<u64>().map_err(|_| self.err(key, format!("`{v}` is not a non-negative integer"))))
            .transpose()
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        self.raw(key)
            .map(|v| match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(self.err(key, format!("`{v}` is not a boolean"))),
            })
            .transpose()
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.raw(key).map(|v| parse_list(v).map_err(|m| self.err(key, m))).transpose()
    }

    /// Rows separated by `;`, entries by `,` or whitespace.
    pub fn matrix(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>, CliError> {
        self.raw(key)
            .map(|v| {
                let rows: Vec<Vec<f64>> = v
                    .split(';')
                    .map(|row| parse_list(&row.replace(char::is_whitespace, ",")))
                    .collect::<Result<_, _>>()
                    .map_err(|m| self.err(key, m))?;
                let width = rows[0].len();
                if width == 0 || rows.iter().any(|r| r.len() != width) {
                    return Err(self.err(key, "rows must be non-empty and of equal length"));
                }
                Ok(rows)
            })
            .transpose()
    }
}

pub fn parse_f64(v: &str) -> Result<f64, String> {
    match v.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("`{}` is not a finite number", v.trim())),
    }
}

/// Comma-separated numbers; empty items are skipped so `1, 2,` and `1,,2` are accepted.
pub fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse_f64).collect()
}
