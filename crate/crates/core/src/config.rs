//! TOML batch configuration.
//!
//! ```toml
//! out = "results"
//! emit = ["csv", "json", "svg"]
//!
//! [[experiment]]
//! id = "variance_l2"
//! horizon = 1000
//! class = { kind = "linear_ball", dimension = 3 }
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::engine::ExperimentSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Csv,
    Json,
    Svg,
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn default_emit() -> BTreeSet<Emit> {
    [Emit::Csv, Emit::Json].into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_emit")]
    pub emit: BTreeSet<Emit>,
    #[serde(rename = "experiment", default)]
    pub experiments: Vec<ExperimentSpec>,
}

/// Parse failure with a 1-based source position when one is known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn position(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, column)
}

impl Config {
    /// Parses and validates every experiment; ids must be unique.
    pub fn parse(src: &str) -> std::result::Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(src).map_err(|e| {
            let pos = e.span().map(|s| position(src, s.start));
            ConfigError {
                line: pos.map(|p| p.0),
                column: pos.map(|p| p.1),
                message: e.message().to_string(),
            }
        })?;
        let plain = |message: String| ConfigError {
            line: None,
            column: None,
            message,
        };
        if cfg.experiments.is_empty() {
            return Err(plain("no [[experiment]] entries".into()));
        }
        let mut ids = BTreeSet::new();
        for spec in &cfg.experiments {
            if !ids.insert(spec.id.as_str()) {
                return Err(plain(format!("duplicate experiment id {:?}", spec.id)));
            }
            spec.validate()
                .and_then(|_| spec.resolve_bound().map(|_| ()))
                .map_err(|e| plain(format!("experiment {:?}: {e}", spec.id)))?;
        }
        Ok(cfg)
    }

    pub fn experiment(&self, id: &str) -> Result<&ExperimentSpec> {
        self.experiments
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::InvalidSpec(format!("no experiment {id:?}")))
    }
}
