//! Run configuration: TOML file sections merged with `--key value` overrides.
//!
//! Precedence is flag > file > built-in default. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use riskrnn_core::model::{ModelConfig, Variant};
use riskrnn_core::pipeline::EvalConfig;
use riskrnn_core::synthworld::ScenarioConfig;
use riskrnn_core::train::TrainConfig;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Directory holding `train.jsonl`, `val.jsonl` and `test.jsonl`.
    pub dir: PathBuf,
    pub train_videos: usize,
    pub val_videos: usize,
    pub test_videos: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("data"),
            train_videos: 200,
            val_videos: 50,
            test_videos: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiskMapConfig {
    pub width: usize,
    pub height: usize,
}

impl Default for RiskMapConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Model variant; overrides the memory/imagination flags in `[model]`.
    pub variant: String,
    pub data: DataConfig,
    pub scenario: ScenarioConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub riskmap: RiskMapConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            variant: Variant::LRai.to_string(),
            data: DataConfig::default(),
            scenario: ScenarioConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            riskmap: RiskMapConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads `path` (if any), applies `overrides` in order and validates.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                text.parse::<Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        for (key, value) in overrides {
            apply_override(&mut table, key, value)?;
        }
        // round-trip through text so type errors point at the offending key
        let merged = toml::to_string(&table)
            .map_err(|e| CliError::Config(format!("cannot merge overrides: {e}")))?;
        let cfg: RunConfig = toml::from_str(&merged)
            .map_err(|e| CliError::Config(e.to_string().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn variant(&self) -> Result<Variant, CliError> {
        self.variant
            .parse()
            .map_err(|e| CliError::Config(format!("variant: {e}")))
    }

    /// Model configuration for `variant` with this run's dimensions.
    pub fn model_for(&self, variant: Variant) -> ModelConfig {
        self.model.clone().with_variant(variant)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let section = |name: &str, r: riskrnn_core::Result<()>| {
            r.map_err(|e| CliError::Config(format!("[{name}] {e}")))
        };
        self.variant()?;
        section("scenario", self.scenario.validate())?;
        section("model", self.model_for(self.variant()?).validate())?;
        section("train", self.train.validate())?;
        section("eval", self.eval.validate())?;
        if self.data.train_videos == 0 || self.data.test_videos == 0 {
            return Err(CliError::Config(
                "[data] train_videos and test_videos must be >= 1".into(),
            ));
        }
        if self.riskmap.width == 0 || self.riskmap.height == 0 {
            return Err(CliError::Config(
                "[riskmap] width and height must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Sets `key` (`section.key` or a key that exists in exactly one section).
fn apply_override(table: &mut Table, key: &str, raw: &str) -> Result<(), CliError> {
    let path = resolve_key(key)?;
    let value = parse_value(raw);
    let mut node = table;
    for part in &path[..path.len() - 1] {
        let entry = node
            .entry(part.clone())
            .or_insert_with(|| Value::Table(Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("{part} is not a section")))?;
    }
    node.insert(path[path.len() - 1].clone(), value);
    Ok(())
}

fn resolve_key(key: &str) -> Result<Vec<String>, CliError> {
    let parts: Vec<String> = key.split('.').map(str::to_string).collect();
    if parts.iter().any(String::is_empty) {
        return Err(CliError::Config(format!("malformed key {key:?}")));
    }
    if parts.len() > 1 {
        return Ok(parts);
    }
    let defaults = Value::try_from(RunConfig::default()).expect("defaults serialize");
    let top = defaults.as_table().expect("config is a table");
    if top.get(key).is_some_and(|v| !v.is_table()) {
        return Ok(parts);
    }
    let owners: Vec<&String> = top
        .iter()
        .filter(|(_, v)| v.as_table().is_some_and(|t| t.contains_key(key)))
        .map(|(k, _)| k)
        .collect();
    match owners.as_slice() {
        [one] => Ok(vec![(*one).clone(), key.to_string()]),
        [] => Err(CliError::Config(format!("unknown key `{key}`"))),
        many => Err(CliError::Config(format!(
            "ambiguous key `{key}`; use one of {}",
            many.iter()
                .map(|s| format!("{s}.{key}"))
                .collect::<Vec<_>>()
                .join(", ")
        ))),
    }
}

/// A TOML literal if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}
