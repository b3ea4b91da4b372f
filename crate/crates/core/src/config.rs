//! Plain-text `key = value` configuration files.
//!
//! Blank lines and `#` comments (whole-line or trailing) are ignored. Keys may
//! contain dots. Every error carries the file path and 1-based line number.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct KeyValues {
    path: PathBuf,
    entries: Vec<Entry>,
}

impl KeyValues {
    pub fn parse(text: &str, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut entries: Vec<Entry> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Parse {
                    path,
                    line,
                    message: format!("expected `key = value`, found `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(Error::Parse {
                    path,
                    line,
                    message: "empty key or value".into(),
                });
            }
            if let Some(prev) = entries.iter().find(|e| e.key == key) {
                return Err(Error::Parse {
                    path,
                    line,
                    message: format!("duplicate key `{key}` (first set on line {})", prev.line),
                });
            }
            entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
        Ok(Self { path, entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn error(&self, entry: &Entry, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: entry.line,
            message: message.into(),
        }
    }

    pub fn unknown_key(&self, entry: &Entry) -> Error {
        self.error(entry, format!("unknown key `{}`", entry.key))
    }

    pub fn value<T: FromStr>(&self, entry: &Entry) -> Result<T> {
        entry
            .value
            .parse()
            .map_err(|_| self.error(entry, format!("invalid value `{}` for `{}`", entry.value, entry.key)))
    }

    /// Parses a strictly positive, finite number.
    pub fn positive(&self, entry: &Entry) -> Result<f64> {
        let v: f64 = self.value(entry)?;
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(self.error(entry, format!("`{}` must be positive, got {}", entry.key, entry.value)))
        }
    }

    pub fn non_negative(&self, entry: &Entry) -> Result<f64> {
        let v: f64 = self.value(entry)?;
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(self.error(
                entry,
                format!("`{}` must be non-negative, got {}", entry.key, entry.value),
            ))
        }
    }
}
