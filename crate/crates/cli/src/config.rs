//! Layered configuration.
//!
//! Resolution order, later layers winning key by key:
//!
//! 1. built-in defaults
//! 2. the JSON config file (`--config`, else `$LADDER_CONFIG`)
//! 3. environment variables `LADDER__<SECTION>__<KEY>[__<KEY>...]`,
//!    e.g. `LADDER__LLM__MODEL_NAME=gpt-4o` or `LADDER__BASELINE__PRIORS__1-1=0.9`
//! 4. command-line flags, including `--set section.key=value`
//!
//! Override values are parsed as JSON when possible (`0.5`, `true`,
//! `null`), otherwise taken as strings. Keys whose current value is a string
//! always receive the raw text.

use std::path::{Path, PathBuf};

use ladder_core::baseline::{GaleChurchParams, Priors};
use ladder_core::llm::{AlignOptions, LlmConfig, RepairPolicy};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub const ENV_PREFIX: &str = "LADDER__";
pub const CONFIG_ENV: &str = "LADDER_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path} is not valid JSON: {source}")]
    Syntax {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid override {0:?}: expected key.path=value")]
    BadOverride(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub c: f64,
    pub s2: f64,
    pub priors: Priors,
    /// Replace `c` by each pair's target/source character ratio.
    pub estimate_ratio: bool,
}

impl Default for BaselineSection {
    fn default() -> Self {
        let p = GaleChurchParams::default();
        BaselineSection {
            c: p.c,
            s2: p.s2,
            priors: p.priors,
            estimate_ratio: false,
        }
    }
}

impl BaselineSection {
    pub fn params(&self) -> GaleChurchParams {
        GaleChurchParams {
            c: self.c,
            s2: self.s2,
            priors: self.priors,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub include_null: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    pub allow_blank: bool,
    /// JSON file with `system_text`, `user_text` and `schema_text`; the
    /// bundled template when absent.
    pub template: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub max_concurrency: usize,
    pub policy: RepairPolicy,
    pub chunk_size_src: usize,
    pub tgt_margin: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        let o = AlignOptions::default();
        RunSection {
            max_concurrency: o.max_concurrency,
            policy: o.policy,
            chunk_size_src: o.chunk_size_src,
            tgt_margin: o.tgt_margin,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub llm: LlmConfig,
    pub baseline: BaselineSection,
    pub eval: EvalSection,
    pub io: IoSection,
    pub run: RunSection,
}

impl AppConfig {
    pub fn align_options(&self) -> AlignOptions {
        AlignOptions {
            policy: self.run.policy,
            chunk_size_src: self.run.chunk_size_src,
            tgt_margin: self.run.tgt_margin,
            max_concurrency: self.run.max_concurrency,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.run.max_concurrency == 0 {
            return Err(ConfigError::Invalid("run.max_concurrency must be at least 1".into()));
        }
        self.baseline
            .params()
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("baseline: {e}")))?;
        self.llm
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

/// A single `path = value` override.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub raw: String,
}

impl Override {
    pub fn new(path: &str, raw: impl Into<String>) -> Self {
        Override {
            path: path.split('.').map(str::to_string).collect(),
            raw: raw.into(),
        }
    }

    /// Parses `section.key=value`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let (path, raw) = text
            .split_once('=')
            .filter(|(p, _)| !p.is_empty() && !p.split('.').any(str::is_empty))
            .ok_or_else(|| ConfigError::BadOverride(text.to_string()))?;
        Ok(Override::new(path, raw))
    }

    /// Collects `LADDER__A__B=value` variables.
    pub fn from_env(vars: impl IntoIterator<Item = (String, String)>) -> Vec<Override> {
        let mut out: Vec<Override> = vars
            .into_iter()
            .filter_map(|(k, v)| {
                let rest = k.strip_prefix(ENV_PREFIX)?;
                let path: Vec<String> = rest.split("__").map(|s| s.to_ascii_lowercase()).collect();
                (!path.iter().any(String::is_empty)).then_some(Override { path, raw: v })
            })
            .collect();
        out.sort_by(|a, b| a.path.cmp(&b.path));
        out
    }
}

fn merge(base: &mut Value, layer: Value) {
    match (base, layer) {
        (Value::Object(base), Value::Object(layer)) => {
            for (k, v) in layer {
                merge(base.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, layer) => *slot = layer,
    }
}

fn apply(root: &mut Value, ov: &Override) {
    let mut node = root;
    for key in &ov.path {
        if !node.is_object() {
            *node = Value::Object(Map::new());
        }
        node = node
            .as_object_mut()
            .expect("object")
            .entry(key.clone())
            .or_insert(Value::Null);
    }
    *node = if node.is_string() {
        Value::String(ov.raw.clone())
    } else {
        serde_json::from_str(&ov.raw).unwrap_or_else(|_| Value::String(ov.raw.clone()))
    };
}

/// Reads the JSON config file, if any.
pub fn read_config_file(path: &Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Syntax {
        path: path.to_path_buf(),
        source,
    })
}

/// Merges the layers in order and deserializes the result.
pub fn resolve(
    file: Option<Value>,
    env: &[Override],
    flags: &[Override],
) -> Result<AppConfig, ConfigError> {
    let mut value = serde_json::to_value(AppConfig::default()).expect("defaults serialize");
    if let Some(file) = file {
        merge(&mut value, file);
    }
    for ov in env.iter().chain(flags) {
        apply(&mut value, ov);
    }
    let config: AppConfig =
        serde_json::from_value(value).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(config)
}

/// Loads from the process environment: config file from `explicit` or
/// `$LADDER_CONFIG`, then `LADDER__*` variables, then `flags`.
pub fn load(explicit: Option<&Path>, flags: &[Override]) -> Result<AppConfig, ConfigError> {
    let path = explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let file = path.as_deref().map(read_config_file).transpose()?;
    let env = Override::from_env(std::env::vars());
    resolve(file, &env, flags)
}
