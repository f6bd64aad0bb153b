//! Run configuration: command-line values take precedence over a TOML file
//! given with `--config`, which takes precedence over built-in defaults.
//!
//! The file uses the long flag names (with `_` or `-`) as keys.  Keys at the
//! top level apply to every subcommand; a table named after the subcommand
//! (e.g. `[mcgehee]`) overrides them for that subcommand only.

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// The parsed configuration file and the resolved values of the current run.
#[derive(Debug, Default)]
pub struct Resolver {
    file: toml::Table,
    section: String,
    resolved: Map<String, Value>,
}

impl Resolver {
    /// Loads `path` (if any) for subcommand `section`.
    pub fn load(path: Option<&Path>, section: &str) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                text.parse::<toml::Table>().with_context(|| format!("parsing config {}", p.display()))?
            }
            None => toml::Table::new(),
        };
        Ok(Self { file, section: section.to_owned(), resolved: Map::new() })
    }

    fn from_file<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        let alt = key.replace('_', "-");
        let scoped = self.file.get(&self.section).and_then(|v| v.as_table());
        let found = [scoped, Some(&self.file)]
            .into_iter()
            .flatten()
            .find_map(|t| t.get(key).or_else(|| t.get(&alt)));
        match found {
            Some(v) => Ok(Some(v.clone().try_into().with_context(|| format!("config key `{key}`"))?)),
            None => Ok(None),
        }
    }

    /// Resolves an optional value and records it (if present).
    pub fn opt<T: DeserializeOwned + Serialize + Clone>(&mut self, key: &str, cli: Option<T>) -> Result<Option<T>> {
        let v = match cli {
            Some(v) => Some(v),
            None => self.from_file(key)?,
        };
        if let Some(v) = &v {
            self.resolved.insert(key.to_owned(), serde_json::to_value(v)?);
        }
        Ok(v)
    }

    /// Resolves a value with a default and records it.
    pub fn get<T: DeserializeOwned + Serialize + Clone>(&mut self, key: &str, cli: Option<T>, default: T) -> Result<T> {
        Ok(self.opt(key, cli)?.unwrap_or_else(|| {
            self.resolved.insert(key.to_owned(), serde_json::to_value(&default).unwrap_or(Value::Null));
            default
        }))
    }

    /// Resolves a required value.
    pub fn require<T: DeserializeOwned + Serialize + Clone>(&mut self, key: &str, cli: Option<T>) -> Result<T> {
        self.opt(key, cli)?.ok_or_else(|| anyhow::Error::new(UsageError(format!("missing --{}", key.replace('_', "-")))))
    }

    /// Resolves a boolean switch (a flag set on the command line wins).
    pub fn flag(&mut self, key: &str, cli: bool) -> Result<bool> {
        self.get(key, cli.then_some(true), false)
    }

    /// Every value used by the run, keyed by flag name.
    pub fn resolved(&self) -> Value {
        Value::Object(self.resolved.clone())
    }
}

/// Invalid command-line usage (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Shorthand for returning a usage error.
pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(anyhow::Error::new(UsageError(msg.into())))
}
