use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::TeControlConfig;
use crate::error::{Error, Result};
use crate::graph::LabelSource;
use crate::model::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(Error::Config(format!("unknown precision {other:?}"))),
        }
    }
}

/// Criterion for the checkpoint whose test accuracy is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    #[default]
    ValLoss,
    ValAccuracy,
}

impl FromStr for SelectionMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "val_loss" => Ok(SelectionMetric::ValLoss),
            "val_accuracy" | "val_acc" => Ok(SelectionMetric::ValAccuracy),
            other => Err(Error::Config(format!("unknown selection metric {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub model: ModelConfig,
    pub te: TeControlConfig,
    pub precision: Precision,
    pub selection_metric: SelectionMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            patience: 100,
            seed: 0,
            model: ModelConfig::default(),
            te: TeControlConfig::default(),
            precision: Precision::F64,
            selection_metric: SelectionMetric::ValLoss,
        }
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be ≥ 1".into()));
        }
        if self.patience > self.epochs {
            return Err(Error::Config(format!(
                "patience {} exceeds epochs {}",
                self.patience, self.epochs
            )));
        }
        if !(self.learning_rate > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::Config("learning rate must be > 0 and weight decay ≥ 0".into()));
        }
        self.model.validate()?;
        self.te.validate()
    }

    /// Short hex digest of the full configuration.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Applies one option by its command-line name (without dashes).
    /// Returns `Ok(false)` for keys that are not training options.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "epochs" => self.epochs = parse(key, value)?,
            "lr" => self.learning_rate = parse(key, value)?,
            "weight-decay" => self.weight_decay = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "hidden" => self.model.hidden_dim = parse(key, value)?,
            "layers" => self.model.num_layers = parse(key, value)?,
            "dropout" => self.model.dropout_rate = parse(key, value)?,
            "degree-scaling" => self.model.degree_scaling = parse_bool(key, value)?,
            "precision" => self.precision = value.parse()?,
            "select-by" => self.selection_metric = value.parse()?,
            "no-te" => self.te.enabled = !parse_bool(key, value)?,
            "te" => self.te.enabled = parse_bool(key, value)?,
            "te-period" => self.te.period_epochs = parse(key, value)?,
            "te-het-frac" => self.te.het_fraction = parse(key, value)?,
            "te-deg-frac" => self.te.degree_fraction = parse(key, value)?,
            "te-max-neighbors" => self.te.max_neighbors = parse(key, value)?,
            "te-k" => self.te.k_neighbors = parse(key, value)?,
            "te-lag" => self.te.lag = parse(key, value)?,
            "te-seed" => self.te.estimator_seed = parse(key, value)?,
            "te-site" => self.te.site = value.parse()?,
            "te-labels" => {
                self.te.label_source = match value {
                    "train_plus_predictions" => LabelSource::TrainPlusPredictions,
                    "full_labels" => LabelSource::FullLabels,
                    other => return Err(Error::Config(format!("unknown label source {other:?}"))),
                }
            }
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are
/// skipped, and a bare key means `true`.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => (line, "true"),
        };
        if k.is_empty() || k.contains(char::is_whitespace) {
            return Err(Error::Config(format!("config line {}: malformed key in {raw:?}", n + 1)));
        }
        out.push((k.trim_start_matches("--").to_string(), v.to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip() {
        let text = "# comment\nepochs = 40\nlr=0.05\nno-te\nte-period = 3 # trailing\nprecision = f32\ndataset = cora\n";
        let mut cfg = TrainConfig::default();
        let mut unknown = Vec::new();
        for (k, v) in parse_config_text(text).unwrap() {
            if !cfg.set(&k, &v).unwrap() {
                unknown.push(k);
            }
        }
        assert_eq!(cfg.epochs, 40);
        assert_eq!(cfg.learning_rate, 0.05);
        assert!(!cfg.te.enabled);
        assert_eq!(cfg.te.period_epochs, 3);
        assert_eq!(cfg.precision, Precision::F32);
        assert_eq!(unknown, vec!["dataset"]);
    }

    #[test]
    fn bad_values_are_errors() {
        let mut cfg = TrainConfig::default();
        assert!(cfg.set("epochs", "many").is_err());
        assert!(cfg.set("precision", "f16").is_err());
        assert!(parse_config_text("a b = 1").is_err());
    }

    #[test]
    fn fingerprint_tracks_changes() {
        let a = TrainConfig::default();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.te.enabled = false;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }

    #[test]
    fn validation() {
        let mut c = TrainConfig::default();
        assert!(c.validate().is_ok());
        c.patience = 600;
        assert!(c.validate().is_err());
        c.patience = 10;
        c.epochs = 0;
        assert!(c.validate().is_err());
    }
}
