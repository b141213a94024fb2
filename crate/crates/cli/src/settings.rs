//! Resolution of run settings: command-line flag, then config file, then
//! built-in default. Every resolved value is recorded for the manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use serde_json::Value;

/// Validation problem in the invocation itself (exit code 1, usage shown).
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

const KNOWN_KEYS: &[&str] = &[
    "corpus",
    "format",
    "battery",
    "embeddings",
    "out",
    "seed",
    "workers",
    "profile",
    "subset",
    "gender",
    "exact_p",
    "sampled_p",
    "lookup",
    "strict_sizes",
    "dimension",
    "window",
    "epochs",
    "x_max",
    "alpha",
    "learning_rate",
    "min_count",
    "emit",
];

/// Flat `key = value` TOML document; keys mirror the long flag names with
/// `-` or `_`.
#[derive(Debug, Default)]
pub struct ConfigFile {
    pub path: Option<PathBuf>,
    values: BTreeMap<String, toml::Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<ConfigFile> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let raw = std::fs::read_to_string(path)
            .map_err(|e| weatkit::Error::io(path, e))
            .context("reading config file")?;
        let table: toml::Table = toml::from_str(&raw)
            .map_err(|e| Usage(format!("config file {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            let norm = key.replace('-', "_");
            if !KNOWN_KEYS.contains(&norm.as_str()) {
                return Err(Usage(format!(
                    "config file {}: unknown key {key:?}",
                    path.display()
                ))
                .into());
            }
            if matches!(value, toml::Value::Table(_) | toml::Value::Array(_)) {
                return Err(Usage(format!(
                    "config file {}: key {key:?} must be a plain value",
                    path.display()
                ))
                .into());
            }
            values.insert(norm, value);
        }
        Ok(ConfigFile {
            path: Some(path.to_path_buf()),
            values,
        })
    }

    fn raw(&self, key: &str) -> Option<String> {
        self.values.get(key).map(|v| match v {
            toml::Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    }
}

pub struct Resolver<'a> {
    config: &'a ConfigFile,
    pub resolved: BTreeMap<String, Value>,
}

impl<'a> Resolver<'a> {
    pub fn new(config: &'a ConfigFile) -> Self {
        Resolver {
            config,
            resolved: BTreeMap::new(),
        }
    }

    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + serde::Serialize,
        T::Err: fmt::Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.config.raw(key) {
                Some(raw) => Some(
                    raw.parse::<T>()
                        .map_err(|e| Usage(format!("config key {key:?}: {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.record(key, v);
        }
        Ok(value)
    }

    pub fn or<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + serde::Serialize,
        T::Err: fmt::Display,
    {
        match self.optional(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, &default);
                Ok(default)
            }
        }
    }

    pub fn required<T>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr + serde::Serialize,
        T::Err: fmt::Display,
    {
        self.optional(key, flag)?.ok_or_else(|| {
            Usage(format!(
                "missing --{} (flag or config key {key:?})",
                key.replace('_', "-")
            ))
            .into()
        })
    }

    /// Boolean switches: a set flag wins, otherwise config, otherwise false.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool> {
        self.or(key, flag.then_some(true), false)
    }

    pub fn record(&mut self, key: &str, value: impl serde::Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.resolved.insert(key.to_string(), v);
    }
}
