//! Run configuration resolution.
//!
//! Precedence: command-line flags, then environment variables
//! (BRIDGE_API_KEY, BRIDGE_API_BASE), then the config file, then built-in
//! defaults.

use crate::RunArgs;
use bridge_core::datasets::DatasetTag;
use bridge_core::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Live,
    Replay,
    Record,
    Scripted,
}

impl FromStr for BackendChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<BackendChoice, String> {
        match s.to_ascii_lowercase().as_str() {
            "live" => Ok(BackendChoice::Live),
            "replay" => Ok(BackendChoice::Replay),
            "record" => Ok(BackendChoice::Record),
            "scripted" => Ok(BackendChoice::Scripted),
            other => Err(format!("unknown backend '{other}'")),
        }
    }
}

/// Keys accepted in the TOML config file; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<PathBuf>,
    pub format: Option<String>,
    pub backend: Option<String>,
    pub cache: Option<PathBuf>,
    pub script: Option<PathBuf>,
    pub model: Option<String>,
    pub shots: Option<usize>,
    pub retry: Option<u32>,
    pub retranslate: Option<u32>,
    pub self_consistency: Option<u32>,
    pub workers: Option<usize>,
    pub limit: Option<usize>,
    pub out: Option<PathBuf>,
    pub traces: Option<bool>,
    pub seed: Option<u64>,
    pub api_base: Option<String>,
    pub api_key: Option<String>,
    pub api_style: Option<String>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub format: DatasetTag,
    pub backend: BackendChoice,
    pub cache: Option<PathBuf>,
    pub script: Option<PathBuf>,
    pub model: String,
    pub shots: usize,
    pub retry: u32,
    pub retranslate: u32,
    pub self_consistency: u32,
    pub workers: usize,
    pub limit: Option<usize>,
    pub out: PathBuf,
    pub traces: bool,
    pub seed: u64,
    pub api_base: String,
    /// Whether a key is available; the key itself is never printed.
    pub api_key_set: bool,
    pub api_style: String,
    #[serde(skip)]
    pub api_key: String,
}

impl RunConfig {
    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            model: self.model.clone(),
            retry_limit: self.retry,
            shots: self.shots,
            self_consistency_k: self.self_consistency,
            retranslate_passes: self.retranslate,
            ..PipelineConfig::default()
        }
    }
}

pub fn resolve(args: &RunArgs) -> Result<RunConfig, String> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
            toml::from_str(&text).map_err(|e| format!("bad config file: {e}"))?
        }
        None => FileConfig::default(),
    };

    let env_key = std::env::var("BRIDGE_API_KEY")
        .ok()
        .filter(|v| !v.is_empty());
    let env_base = std::env::var("BRIDGE_API_BASE")
        .ok()
        .filter(|v| !v.is_empty());

    let dataset = args
        .dataset
        .clone()
        .or(file.dataset)
        .ok_or("missing --dataset")?;
    let format: DatasetTag = args
        .format
        .clone()
        .or(file.format)
        .unwrap_or_else(|| "gsm8k".to_string())
        .parse()?;
    let backend: BackendChoice = args
        .backend
        .clone()
        .or(file.backend)
        .unwrap_or_else(|| "live".to_string())
        .parse()?;
    let api_key = env_key.or(file.api_key).unwrap_or_default();
    let api_base = env_base
        .or(file.api_base)
        .unwrap_or_else(|| "https://api.openai.com/v1".to_string());
    let api_style = file.api_style.unwrap_or_else(|| "chat".to_string());
    if api_style != "chat" && api_style != "completions" {
        return Err(format!(
            "api_style must be chat or completions, got '{api_style}'"
        ));
    }

    let workers_default = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let mut workers = args.workers.or(file.workers).unwrap_or(workers_default);
    if backend == BackendChoice::Live {
        workers = workers.min(8); // respect provider rate limits
    }
    workers = workers.max(1);

    let config = RunConfig {
        dataset,
        format,
        backend,
        cache: args.cache.clone().or(file.cache),
        script: args.script.clone().or(file.script),
        model: args
            .model
            .clone()
            .or(file.model)
            .unwrap_or_else(|| "gpt-3.5-turbo".to_string()),
        shots: args.shots.or(file.shots).unwrap_or(8),
        retry: args.retry.or(file.retry).unwrap_or(5),
        retranslate: args.retranslate.or(file.retranslate).unwrap_or(1),
        self_consistency: args.self_consistency.or(file.self_consistency).unwrap_or(1),
        workers,
        limit: args.limit.or(file.limit),
        out: args
            .out
            .clone()
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from("results.jsonl")),
        traces: args.traces || file.traces.unwrap_or(false),
        seed: args.seed.or(file.seed).unwrap_or(0),
        api_base,
        api_key_set: !api_key.is_empty(),
        api_style,
        api_key,
    };

    match config.backend {
        BackendChoice::Replay | BackendChoice::Record if config.cache.is_none() => {
            return Err(format!("backend {:?} requires --cache", config.backend));
        }
        BackendChoice::Live if !config.api_key_set => {
            return Err("live backend requires BRIDGE_API_KEY".to_string());
        }
        BackendChoice::Scripted if config.script.is_none() => {
            return Err("scripted backend requires --script".to_string());
        }
        _ => {}
    }

    Ok(config)
}
