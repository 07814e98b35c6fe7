//! JSON run configuration accepted by `--config`.
//!
//! Every field is optional; command-line flags take precedence over the
//! file, and the file takes precedence over built-in defaults.

use std::path::Path;

use awdr_core::harness::{GradCheckTarget, TestFunction};
use awdr_core::optim::{HyperParams, OptimizerKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Bench,
    TrainToy,
    GradCheck,
    Scale,
    Metrics,
}

impl CommandName {
    pub fn name(self) -> &'static str {
        match self {
            CommandName::Bench => "bench",
            CommandName::TrainToy => "train-toy",
            CommandName::GradCheck => "grad-check",
            CommandName::Scale => "scale",
            CommandName::Metrics => "metrics",
        }
    }

    /// Config keys meaningful for this command, besides `command`, `seed`,
    /// `output_path` and `format`.
    fn keys(self) -> &'static [&'static str] {
        match self {
            CommandName::Bench => &["optimizer", "hp", "function", "steps", "x0", "lr_grid"],
            CommandName::TrainToy => &[
                "optimizer",
                "hp",
                "epochs",
                "batch_size",
                "n_per_class",
                "dim",
                "separation",
            ],
            CommandName::GradCheck => &["loss", "cases"],
            CommandName::Scale => &["step", "min", "max", "phi"],
            CommandName::Metrics => &["input", "threshold"],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandName>,
    pub optimizer: Option<OptimizerKind>,
    /// Missing hyperparameters take their defaults.
    pub hp: Option<HyperParams>,
    pub seed: Option<u64>,
    pub output_path: Option<String>,
    pub format: Option<Format>,

    pub function: Option<TestFunction>,
    pub steps: Option<u64>,
    pub x0: Option<Vec<f64>>,
    pub lr_grid: Option<Vec<f64>>,

    pub epochs: Option<u64>,
    pub batch_size: Option<usize>,
    pub n_per_class: Option<usize>,
    pub dim: Option<usize>,
    pub separation: Option<f64>,

    pub loss: Option<GradCheckTarget>,
    pub cases: Option<usize>,

    pub step: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub phi: Option<f64>,

    pub input: Option<String>,
    pub threshold: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("config is for command `{found}`, not `{expected}`")]
    CommandMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("config field `{field}` does not apply to `{command}`")]
    Irrelevant {
        field: String,
        command: &'static str,
    },
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: shown.clone(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| ConfigError::Parse {
            path: shown,
            source,
        })
    }

    /// Rejects a config written for another command or carrying fields the
    /// command would silently ignore.
    pub fn check_for(&self, command: CommandName) -> Result<(), ConfigError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(ConfigError::CommandMismatch {
                    expected: command.name(),
                    found: c.name(),
                });
            }
        }
        let value = serde_json::to_value(self).expect("config serializes");
        let allowed = command.keys();
        for (key, v) in value.as_object().expect("config is an object") {
            let shared = matches!(key.as_str(), "command" | "seed" | "output_path" | "format");
            if !v.is_null() && !shared && !allowed.contains(&key.as_str()) {
                return Err(ConfigError::Irrelevant {
                    field: key.clone(),
                    command: command.name(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_config() {
        let cfg = RunConfig::from_json(
            r#"{"command":"train-toy","optimizer":"awdr","hp":{"lr":0.01},"seed":3,"format":"json"}"#,
        )
        .unwrap();
        assert_eq!(cfg.command, Some(CommandName::TrainToy));
        assert_eq!(cfg.optimizer, Some(OptimizerKind::Awdr));
        assert_eq!(cfg.hp.unwrap().lr, 0.01);
        assert_eq!(cfg.hp.unwrap().beta1, 0.9);
        assert_eq!(cfg.format, Some(Format::Json));
        cfg.check_for(CommandName::TrainToy).unwrap();
    }

    #[test]
    fn rejects_unknown_and_misplaced_fields() {
        assert!(RunConfig::from_json(r#"{"seeds":1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"hp":{"learning_rate":1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"hp":{"lr":-1}}"#).is_err());
        let cfg = RunConfig::from_json(r#"{"loss":"ciou"}"#).unwrap();
        assert!(matches!(
            cfg.check_for(CommandName::Bench),
            Err(ConfigError::Irrelevant { .. })
        ));
        let cfg = RunConfig::from_json(r#"{"command":"scale"}"#).unwrap();
        assert!(matches!(
            cfg.check_for(CommandName::Metrics),
            Err(ConfigError::CommandMismatch { .. })
        ));
    }
}
