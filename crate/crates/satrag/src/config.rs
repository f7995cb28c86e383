//! Application configuration: one TOML file drives every subcommand,
//! with command-line flags overriding file values.
//!
//! Secrets never live in the file. Provider sections carry the *name*
//! of the environment variable holding the API key; validation rejects
//! values that do not look like environment variable names, so a pasted
//! key fails fast instead of being written to disk.

use crate::dataset_gen::GenConfig;
use crate::eval::EvalConfig;
use crate::fusion::FusionConfig;
use crate::providers::http::RetryPolicy;
use crate::providers::{HttpProvider, ProviderDescriptor, ProviderError, ProviderKind};
use crate::retrieval::RetrievalConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config io failure: {0}")]
    Io(String),
    #[error("config parse failure: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Where model calls go: deterministic offline doubles, or HTTP
/// providers from the `[providers.embedding]` / `[providers.completion]`
/// sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderMode {
    #[default]
    Mock,
    Http,
}

/// Connection settings for one HTTP provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSettings {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    /// Embedding vector width; required for embedding use.
    pub dimension: Option<usize>,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    pub retry_attempts: u32,
}

impl Default for ProviderSettings {
    fn default() -> ProviderSettings {
        ProviderSettings {
            endpoint: "http://127.0.0.1:8080".to_string(),
            model: String::new(),
            api_key_env: None,
            dimension: None,
            timeout_ms: 30_000,
            max_in_flight: 8,
            retry_attempts: 3,
        }
    }
}

fn looks_like_env_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

impl ProviderSettings {
    pub fn descriptor(&self, kind: ProviderKind) -> ProviderDescriptor {
        ProviderDescriptor {
            kind,
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            timeout_ms: self.timeout_ms,
            dimension: self.dimension,
        }
    }

    /// Construct the HTTP client these settings describe.
    pub fn build(&self) -> Result<HttpProvider, ProviderError> {
        HttpProvider::with_options(
            &self.endpoint,
            &self.model,
            self.api_key_env.as_deref(),
            self.dimension,
            Duration::from_millis(self.timeout_ms.max(1)),
            self.max_in_flight.max(1),
            RetryPolicy {
                attempts: self.retry_attempts.max(1),
                base_delay: Duration::from_millis(500),
            },
        )
    }

    fn validate(&self, kind: ProviderKind, section: &str) -> Result<(), ConfigError> {
        if let Some(name) = &self.api_key_env {
            if !looks_like_env_name(name) {
                return Err(ConfigError::Invalid(format!(
                    "{section}.api_key_env {name:?} is not an environment variable name \
                     (UPPER_SNAKE_CASE); never put key material in the config file"
                )));
            }
        }
        self.descriptor(kind)
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("{section}: {e}")))
    }
}

/// Provider selection for the whole application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ProvidersConfig {
    pub mode: ProviderMode,
    pub embedding: Option<ProviderSettings>,
    pub completion: Option<ProviderSettings>,
}

/// Everything a subcommand needs, deserialized from one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    /// Normalized document store written by `ingest`.
    pub corpus_path: PathBuf,
    /// Decomposed cell records written by `ingest`.
    pub cell_groups_path: PathBuf,
    /// Composite graph written by `build`.
    pub index_path: PathBuf,
    /// Character budget for the per-cell document context snippet.
    pub snippet_budget: usize,
    /// 0 = quiet, 1+ = echo the effective config and per-query traces.
    pub verbosity: u8,
    pub providers: ProvidersConfig,
    pub retrieval: RetrievalConfig,
    pub fusion: FusionConfig,
    pub eval: EvalConfig,
    pub dataset_gen: GenConfig,
}

impl Default for AppConfig {
    fn default() -> AppConfig {
        AppConfig {
            corpus_path: PathBuf::from("data/corpus.jsonl"),
            cell_groups_path: PathBuf::from("data/cell_groups.jsonl"),
            index_path: PathBuf::from("data/graph.json"),
            snippet_budget: 512,
            verbosity: 0,
            providers: ProvidersConfig::default(),
            retrieval: RetrievalConfig::default(),
            fusion: FusionConfig::default(),
            eval: EvalConfig::default(),
            dataset_gen: GenConfig::default(),
        }
    }
}

impl AppConfig {
    /// Read and validate a TOML config file.
    pub fn load(path: &Path) -> Result<AppConfig, ConfigError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        let config: AppConfig = toml::from_str(&raw)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Render the effective configuration (for the verbose echo).
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string_pretty(self).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for pair in self.eval.cutoffs.windows(2) {
            if pair[1] <= pair[0] {
                return Err(ConfigError::Invalid(format!(
                    "eval.cutoffs must be strictly increasing, got {:?}",
                    self.eval.cutoffs
                )));
            }
        }
        if self.eval.cutoffs.first() == Some(&0) {
            return Err(ConfigError::Invalid(
                "eval.cutoffs must be positive".to_string(),
            ));
        }
        if !(0.0..=1.0).contains(&self.eval.claim_threshold) {
            return Err(ConfigError::Invalid(format!(
                "eval.claim_threshold must lie in [0, 1], got {}",
                self.eval.claim_threshold
            )));
        }
        if self.retrieval.top_k == 0 {
            return Err(ConfigError::Invalid(
                "retrieval.top_k must be positive".to_string(),
            ));
        }
        if !(0.0..=1.0).contains(&self.retrieval.similarity_threshold) {
            return Err(ConfigError::Invalid(format!(
                "retrieval.similarity_threshold must lie in [0, 1], got {}",
                self.retrieval.similarity_threshold
            )));
        }
        if self.dataset_gen.degree < 2 {
            return Err(ConfigError::Invalid(
                "dataset_gen.degree must be at least 2".to_string(),
            ));
        }
        if self.dataset_gen.n_pairs == 0 {
            return Err(ConfigError::Invalid(
                "dataset_gen.n_pairs must be positive".to_string(),
            ));
        }
        if self.providers.mode == ProviderMode::Http {
            match &self.providers.embedding {
                Some(settings) => {
                    settings.validate(ProviderKind::Embedding, "providers.embedding")?
                }
                None => {
                    return Err(ConfigError::Invalid(
                        "providers.mode = \"http\" requires a [providers.embedding] section"
                            .to_string(),
                    ))
                }
            }
            if let Some(settings) = &self.providers.completion {
                settings.validate(ProviderKind::Completion, "providers.completion")?;
            }
        }
        Ok(())
    }
}
