//! Flat `key = value` configuration files.
//!
//! ```text
//! # comment
//! [section]
//! key = value          # trailing comment
//! list = 1, 2, 3
//! range = 1:0.5:6      # start:step:stop, inclusive
//! ```
//!
//! Keys are addressed as `section.key`; keys before the first section header
//! live in the unnamed section and are addressed by their bare name.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    entries: BTreeMap<String, Entry>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        let mut problems = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                match rest.strip_suffix(']') {
                    Some(name) if !name.trim().is_empty() => section = name.trim().to_ascii_lowercase(),
                    _ => problems.push(format!("line {line_no}: malformed section header '{line}'")),
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("line {line_no}: expected 'key = value', found '{line}'"));
                continue;
            };
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                problems.push(format!("line {line_no}: empty key"));
                continue;
            }
            let full = if section.is_empty() { key } else { format!("{section}.{key}") };
            let entry = Entry { value: value.trim().to_string(), line: line_no };
            if let Some(prev) = entries.insert(full.clone(), entry) {
                problems.push(format!("line {line_no}: '{full}' already set on line {}", prev.line));
            }
        }
        if problems.is_empty() {
            Ok(Self { entries })
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config '{}': {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies a `section.key=value` override.
    pub fn set_override(&mut self, assignment: &str) -> Result<()> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(Error::Usage(format!("override '{assignment}' is not of the form section.key=value")));
        };
        self.set(key.trim(), value.trim());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_ascii_lowercase(), Entry { value: value.to_string(), line: 0 });
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn describe(&self, key: &str) -> String {
        match self.entries.get(key) {
            Some(e) if e.line > 0 => format!("'{key}' (line {})", e.line),
            _ => format!("'{key}'"),
        }
    }
}

/// Collects typed values and every problem found along the way, so a
/// validation error can list all offenders at once.
pub struct Reader<'a> {
    file: &'a ConfigFile,
    known: Vec<&'static str>,
    pub problems: Vec<String>,
}

impl<'a> Reader<'a> {
    pub fn new(file: &'a ConfigFile) -> Self {
        Self { file, known: Vec::new(), problems: Vec::new() }
    }

    pub fn problem(&mut self, msg: impl Into<String>) {
        self.problems.push(msg.into());
    }

    pub fn scalar<T: FromStr>(&mut self, key: &'static str, default: T) -> T {
        self.known.push(key);
        match self.file.get(key) {
            None => default,
            Some(raw) => match raw.parse() {
                Ok(v) => v,
                Err(_) => {
                    let what = self.file.describe(key);
                    self.problems.push(format!("{what}: cannot parse '{raw}'"));
                    default
                }
            },
        }
    }

    pub fn optional<T: FromStr>(&mut self, key: &'static str) -> Option<T> {
        self.known.push(key);
        let raw = self.file.get(key)?;
        match raw.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                let what = self.file.describe(key);
                self.problems.push(format!("{what}: cannot parse '{raw}'"));
                None
            }
        }
    }

    pub fn text(&mut self, key: &'static str, default: &str) -> String {
        self.known.push(key);
        self.file.get(key).unwrap_or(default).trim().to_ascii_lowercase()
    }

    pub fn raw(&mut self, key: &'static str) -> Option<String> {
        self.known.push(key);
        self.file.get(key).map(str::to_string)
    }

    /// Comma-separated list; numeric entries may be `start:step:stop` ranges.
    pub fn list(&mut self, key: &'static str, default: &[f64]) -> Vec<f64> {
        self.known.push(key);
        let Some(raw) = self.file.get(key) else {
            return default.to_vec();
        };
        match parse_number_list(raw) {
            Ok(v) => v,
            Err(e) => {
                let what = self.file.describe(key);
                self.problems.push(format!("{what}: {e}"));
                default.to_vec()
            }
        }
    }

    pub fn words(&mut self, key: &'static str, default: &str) -> Vec<String> {
        self.text(key, default).split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    }

    /// Records `rule` against `key` unless `ok`.
    pub fn require(&mut self, key: &str, ok: bool, rule: &str) {
        if !ok {
            let what = self.file.describe(key);
            self.problems.push(format!("{what}: {rule}"));
        }
    }

    /// Fails with every accumulated problem, including keys nobody asked for.
    pub fn finish(mut self) -> Result<()> {
        let unknown: Vec<String> = self
            .file
            .keys()
            .filter(|k| !self.known.contains(k))
            .map(|k| format!("unknown key {}", self.file.describe(k)))
            .collect();
        self.problems.extend(unknown);
        if self.problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(self.problems))
        }
    }
}

pub fn parse_number_list(raw: &str) -> std::result::Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').map(str::trim).collect();
        match parts.as_slice() {
            [single] => out.push(single.parse::<f64>().map_err(|_| format!("'{single}' is not a number"))?),
            [start, step, stop] => {
                let parse = |s: &str| s.parse::<f64>().map_err(|_| format!("'{s}' is not a number"));
                let (a, h, b) = (parse(start)?, parse(step)?, parse(stop)?);
                if !(h > 0.0) || b < a {
                    return Err(format!("range '{item}' needs a positive step and stop >= start"));
                }
                let n = ((b - a) / h + 1e-9).floor() as usize;
                if n > 100_000 {
                    return Err(format!("range '{item}' has too many points"));
                }
                // k·h rather than repeated addition keeps values like 1.5 exact.
                out.extend((0..=n).map(|k| a + k as f64 * h));
            }
            _ => return Err(format!("'{item}' is neither a number nor start:step:stop")),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}
