use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempogran::distill::DEFAULT_PROBS;
use tempogran::harmony::{CountMode, DEFAULT_MAX_LEVELS, DEFAULT_NEAR_THRESHOLD};
use tempogran::table::IngestionSchema;

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "TEMPOGRAN_OUT_DIR";

/// Session settings read from `--config`; relative paths resolve against the
/// config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calendar: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<IngestionSchema>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_threshold")]
    pub near_threshold: f64,
    #[serde(default = "default_max_levels")]
    pub max_levels: u64,
    #[serde(default = "default_probs")]
    pub probs: Vec<f64>,
    #[serde(default = "default_mode")]
    pub mode: CountMode,
    /// Explicit descriptor names for harmony screening.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub granularities: Option<Vec<String>>,
    /// Rung range for enumerated descriptors when no explicit list is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
}

fn default_threshold() -> f64 {
    DEFAULT_NEAR_THRESHOLD
}

fn default_max_levels() -> u64 {
    DEFAULT_MAX_LEVELS
}

fn default_probs() -> Vec<f64> {
    DEFAULT_PROBS.to_vec()
}

fn default_mode() -> CountMode {
    CountMode::Observed
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            calendar: None,
            data: None,
            schema: None,
            output_dir: None,
            near_threshold: default_threshold(),
            max_levels: default_max_levels(),
            probs: default_probs(),
            mode: default_mode(),
            granularities: None,
            from: None,
            to: None,
        }
    }
}

impl SessionConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: SessionConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.calendar, &mut cfg.data, &mut cfg.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.near_threshold.is_finite() && (0.0..1.0).contains(&self.near_threshold)) {
            return Err(CliError::Config(format!("near_threshold {} is outside [0, 1)", self.near_threshold)));
        }
        if self.max_levels == 0 {
            return Err(CliError::Config("max_levels must be positive".into()));
        }
        for p in [&self.calendar, &self.data].into_iter().flatten() {
            if !p.is_file() {
                return Err(CliError::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn calendar_path(&self) -> Result<&Path, CliError> {
        self.calendar.as_deref().ok_or_else(|| CliError::Usage("no calendar given (--calendar or config `calendar`)".into()))
    }

    pub fn data_path(&self) -> Result<&Path, CliError> {
        self.data.as_deref().ok_or_else(|| CliError::Usage("no dataset given (--data or config `data`)".into()))
    }

    pub fn schema(&self) -> Result<&IngestionSchema, CliError> {
        self.schema
            .as_ref()
            .ok_or_else(|| CliError::Config("no ingestion schema given (--schema or config `[schema]`)".into()))
    }

    /// `--out-dir`, then the environment, then the config, then the working directory.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }
}
