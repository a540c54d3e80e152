//! Merges the optional config file with command-line flags.
//!
//! Both sources are flat `key = value` pairs keyed by flag name (without the
//! leading dashes). File entries are applied first and flags override them.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::parser::ValueSource;
use clap::{ArgMatches, Command};
use teggcn::train::{parse_config_text, TrainConfig};

/// Keys that select inputs and outputs rather than training behaviour.
pub const COMMAND_KEYS: &[&str] = &[
    "dataset",
    "datasets",
    "data-dir",
    "split",
    "out",
    "markdown",
    "runs",
    "te-log",
    "checkpoint",
    "seeds",
];

#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut s = Settings::default();
        for (k, v) in parse_config_text(&text)? {
            s.values.insert(k, v);
        }
        Ok(s)
    }

    /// Overrides with every argument of `cmd` given explicitly on the
    /// command line.
    pub fn apply_matches(&mut self, cmd: &Command, m: &ArgMatches) {
        for arg in cmd.get_arguments() {
            let id = arg.get_id().as_str();
            if arg.is_global_set() || m.value_source(id) != Some(ValueSource::CommandLine) {
                continue;
            }
            if let Ok(Some(raw)) = m.try_get_raw(id) {
                let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
                let value = if vals.is_empty() { "true".to_string() } else { vals.join(",") };
                self.values.insert(id.replace('_', "-"), value);
            }
        }
    }

    #[cfg(test)]
    pub fn insert(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn parsed<V: std::str::FromStr>(&self, key: &str) -> Result<Option<V>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => match v.parse() {
                Ok(x) => Ok(Some(x)),
                Err(_) => bail!("invalid value {v:?} for {key}"),
            },
        }
    }

    /// Builds the training configuration from every non-command key.
    ///
    /// Unless patience was set explicitly it is capped at the epoch budget,
    /// so `--epochs 50` alone is a valid invocation.
    pub fn train_config(&self) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::default();
        for (k, v) in &self.values {
            if COMMAND_KEYS.contains(&k.as_str()) {
                continue;
            }
            if !cfg.set(k, v)? {
                bail!("unknown option {k:?}");
            }
        }
        if !self.contains("patience") {
            cfg.patience = cfg.patience.min(cfg.epochs);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
