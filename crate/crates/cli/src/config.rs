//! Run configuration: built-in defaults, then an optional TOML file, then
//! command-line flags.

use std::path::{Path, PathBuf};

use cfgchain::gateway::{WireStyle, API_KEY_VAR};
use cfgchain::{Limits, Variant};
use clap::{Args, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackendMode {
    #[default]
    Heuristic,
    Remote,
    Record,
    Replay,
}

/// Where `record` mode sends cache misses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RecordSource {
    #[default]
    Remote,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutFormat {
    #[default]
    Dot,
    Cfgtext,
    Json,
}

/// Keys accepted in the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    backend: Option<BackendMode>,
    endpoint: Option<String>,
    model: Option<String>,
    wire_style: Option<WireStyle>,
    cassette: Option<PathBuf>,
    record_from: Option<RecordSource>,
    kb: Option<PathBuf>,
    variant: Option<String>,
    jobs: Option<usize>,
    max_iterations: Option<usize>,
    retries: Option<u32>,
    max_tokens: Option<u32>,
    out: Option<OutFormat>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct RunArgs {
    /// TOML file with defaults for the flags below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendMode>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub cassette: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub record_from: Option<RecordSource>,
    #[arg(long)]
    pub kb: Option<PathBuf>,
    /// chain, chain-noapr, cot or direct.
    #[arg(long)]
    pub variant: Option<String>,
    /// Parallel block CFG calls.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub retries: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: BackendMode,
    pub endpoint: Option<String>,
    pub model: String,
    pub wire_style: WireStyle,
    pub cassette: Option<PathBuf>,
    pub record_from: RecordSource,
    pub kb: PathBuf,
    pub variant: Variant,
    pub limits: Limits,
    pub out: OutFormat,
}

pub fn read_file_config(path: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

impl RunConfig {
    /// Merges flags over the file; checks mode requirements. Errors are
    /// usage errors.
    pub fn resolve(args: &RunArgs, out: Option<OutFormat>) -> Result<RunConfig, String> {
        let file = match &args.config {
            Some(p) => read_file_config(p)?,
            None => FileConfig::default(),
        };
        let variant_text = args.variant.clone().or(file.variant).unwrap_or_else(|| "chain".into());
        let variant: Variant = variant_text.parse()?;
        let defaults = Limits::default();
        let mut limits = Limits {
            max_iterations: args.max_iterations.or(file.max_iterations).unwrap_or(defaults.max_iterations),
            retries: args.retries.or(file.retries).unwrap_or(defaults.retries),
            jobs: args.jobs.or(file.jobs).unwrap_or(defaults.jobs),
            params: defaults.params,
        };
        if limits.jobs == 0 {
            return Err("--jobs must be at least 1".into());
        }
        if let Some(t) = file.max_tokens {
            limits.params.max_tokens = t;
        }
        let backend = args.backend.or(file.backend).unwrap_or_default();
        let model = args.model.clone().or(file.model).unwrap_or_else(|| limits.params.model.clone());
        limits.params.model = model.clone();
        let cfg = RunConfig {
            backend,
            endpoint: args.endpoint.clone().or(file.endpoint),
            model,
            wire_style: file.wire_style.unwrap_or_default(),
            cassette: args.cassette.clone().or(file.cassette),
            record_from: args.record_from.or(file.record_from).unwrap_or_default(),
            kb: args.kb.clone().or(file.kb).unwrap_or_else(|| "kb".into()),
            variant,
            limits,
            out: out.or(file.out).unwrap_or_default(),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn needs_remote(&self) -> bool {
        self.backend == BackendMode::Remote
            || (self.backend == BackendMode::Record && self.record_from == RecordSource::Remote)
    }

    fn check(&self) -> Result<(), String> {
        if matches!(self.backend, BackendMode::Replay | BackendMode::Record) && self.cassette.is_none() {
            return Err(format!("--backend {:?} requires --cassette", self.backend).to_lowercase());
        }
        if self.needs_remote() {
            if self.endpoint.is_none() {
                return Err("remote calls require --endpoint".into());
            }
            if std::env::var(API_KEY_VAR).map_or(true, |k| k.is_empty()) {
                return Err(format!("remote calls require the {API_KEY_VAR} environment variable"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "variant = \"cot\"\njobs = 2\nkb = \"elsewhere\"\nout = \"json\"\n").unwrap();
        let args = RunArgs { config: Some(path), jobs: Some(7), ..Default::default() };
        let cfg = RunConfig::resolve(&args, None).unwrap();
        assert_eq!(cfg.variant, Variant::Cot);
        assert_eq!(cfg.limits.jobs, 7);
        assert_eq!(cfg.kb, PathBuf::from("elsewhere"));
        assert_eq!(cfg.out, OutFormat::Json);
        assert_eq!(RunConfig::resolve(&args, Some(OutFormat::Dot)).unwrap().out, OutFormat::Dot);
    }

    #[test]
    fn replay_needs_cassette() {
        let args = RunArgs { backend: Some(BackendMode::Replay), ..Default::default() };
        assert!(RunConfig::resolve(&args, None).unwrap_err().contains("--cassette"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "api_key = \"x\"\n").unwrap();
        let args = RunArgs { config: Some(path), ..Default::default() };
        assert!(RunConfig::resolve(&args, None).is_err());
    }
}
