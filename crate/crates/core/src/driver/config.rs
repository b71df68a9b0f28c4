//! Flat `key = value` files with `[section]` headers.
//!
//! ```text
//! # comment
//! [scenario]
//! name = main
//! d_hat0 = 0.3
//! [selfsim]
//! n = 48
//! ```
//!
//! Lists are comma separated. Unknown keys and duplicate keys are errors.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Section = BTreeMap<String, String>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub sections: BTreeMap<String, Section>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig> {
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (ln, line) in text.lines().enumerate() {
            let ln = ln + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
                    .ok_or_else(|| Error::Config(format!("line {ln}: bad section header `{line}`")))?;
                if sections.contains_key(name) {
                    return Err(Error::Config(format!("line {ln}: section [{name}] appears twice")));
                }
                sections.insert(name.to_string(), Section::new());
                current = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {ln}: expected `key = value`, got `{line}`")));
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(Error::Config(format!("line {ln}: empty key or value")));
            }
            let Some(sec) = &current else {
                return Err(Error::Config(format!("line {ln}: `{key}` appears before any section")));
            };
            let entry = sections.get_mut(sec).expect("section inserted above");
            if entry.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Config(format!("line {ln}: duplicate key `{key}` in [{sec}]")));
            }
        }
        Ok(RawConfig { sections })
    }

    pub fn has(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Display) {
        self.sections.entry(section.to_string()).or_default().insert(key.to_string(), value.to_string());
    }

    pub fn remove_section(&mut self, section: &str) -> Option<Section> {
        self.sections.remove(section)
    }
}

/// Typed reads from a [`RawConfig`] that remember every resolved value
/// (defaults included) and flag keys nobody asked for.
pub struct Reader<'a> {
    raw: &'a RawConfig,
    resolved: BTreeMap<String, Section>,
    used: BTreeMap<String, Vec<String>>,
}

impl<'a> Reader<'a> {
    pub fn new(raw: &'a RawConfig) -> Self {
        Self { raw, resolved: BTreeMap::new(), used: BTreeMap::new() }
    }

    fn lookup(&mut self, section: &str, key: &str) -> Option<&'a str> {
        self.used.entry(section.to_string()).or_default().push(key.to_string());
        self.raw.sections.get(section)?.get(key).map(String::as_str)
    }

    fn record(&mut self, section: &str, key: &str, value: String) {
        self.resolved.entry(section.to_string()).or_default().insert(key.to_string(), value);
    }

    fn parse_one<T: FromStr>(section: &str, key: &str, v: &str) -> Result<T> {
        v.trim().parse().map_err(|_| Error::Config(format!("[{section}] {key}: cannot parse `{v}`")))
    }

    pub fn opt<T: FromStr + Display>(&mut self, section: &str, key: &str) -> Result<Option<T>> {
        match self.lookup(section, key) {
            Some(v) => {
                let x: T = Self::parse_one(section, key, v)?;
                self.record(section, key, x.to_string());
                Ok(Some(x))
            }
            None => Ok(None),
        }
    }

    pub fn get<T: FromStr + Display>(&mut self, section: &str, key: &str, default: T) -> Result<T> {
        let x = self.opt(section, key)?.unwrap_or(default);
        self.record(section, key, x.to_string());
        Ok(x)
    }

    pub fn require<T: FromStr + Display>(&mut self, section: &str, key: &str) -> Result<T> {
        self.opt(section, key)?.ok_or_else(|| Error::Config(format!("[{section}] {key} is required")))
    }

    pub fn list<T: FromStr + Display>(&mut self, section: &str, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        let xs = match self.lookup(section, key) {
            Some(v) => v.split(',').map(|x| Self::parse_one(section, key, x)).collect::<Result<Vec<T>>>()?,
            None => default,
        };
        let text = xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        self.record(section, key, text);
        Ok(xs)
    }

    /// Errors on any key of a consumed section that was never read, and on
    /// sections outside `known`.
    pub fn finish(self, known: &[&str]) -> Result<BTreeMap<String, Section>> {
        for (name, sec) in &self.raw.sections {
            if !known.contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown section [{name}]")));
            }
            let used = self.used.get(name).map(Vec::as_slice).unwrap_or(&[]);
            if let Some(k) = sec.keys().find(|k| !used.contains(k)) {
                return Err(Error::Config(format!("unknown key `{k}` in [{name}]")));
            }
        }
        Ok(self.resolved)
    }
}
