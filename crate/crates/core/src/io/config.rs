//! Run configuration (TOML). Secrets never live here: the HTTP API key is read
//! from the environment variable named by `providers.api_key_env`.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adaptation::AdaptationConfig;
use crate::evolution::EvolutionConfig;
use crate::graph::GraphConfig;
use crate::retrieval::DEFAULT_EMBEDDING_DIM;
use crate::sim::SimConfig;

pub const DEFAULT_API_KEY_ENV: &str = "SKILLTREE_API_KEY";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(Self::Mock),
            "http" => Ok(Self::Http),
            _ => Err(format!("unknown provider `{s}` (expected mock or http)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub embedder: ProviderKind,
    pub verifier: ProviderKind,
    pub writer: ProviderKind,
    pub agent: ProviderKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_model: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub embedding_dim: usize,
    pub timeout_secs: u64,
    /// Retries after the first attempt; the wait doubles from `retry_backoff_ms`.
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            embedder: ProviderKind::Mock,
            verifier: ProviderKind::Mock,
            writer: ProviderKind::Mock,
            agent: ProviderKind::Mock,
            base_url: None,
            model: None,
            embedding_model: None,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            timeout_secs: 60,
            max_retries: 3,
            retry_backoff_ms: 250,
        }
    }
}

impl ProviderConfig {
    pub fn any_http(&self) -> bool {
        [self.embedder, self.verifier, self.writer, self.agent].contains(&ProviderKind::Http)
    }

    /// Every role set to `kind`.
    pub fn set_all(&mut self, kind: ProviderKind) {
        self.embedder = kind;
        self.verifier = kind;
        self.writer = kind;
        self.agent = kind;
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.embedding_dim == 0 {
            return Err("providers.embedding_dim must be positive".into());
        }
        if self.timeout_secs == 0 {
            return Err("providers.timeout_secs must be positive".into());
        }
        if self.api_key_env.is_empty() {
            return Err("providers.api_key_env must name an environment variable".into());
        }
        if self.any_http() {
            if self.base_url.as_deref().is_none_or(str::is_empty) {
                return Err("http providers need providers.base_url".into());
            }
            let chat = [self.verifier, self.writer, self.agent].contains(&ProviderKind::Http);
            if chat && self.model.as_deref().is_none_or(str::is_empty) {
                return Err("http chat providers need providers.model".into());
            }
            if self.embedder == ProviderKind::Http && self.embedding_model.as_deref().is_none_or(str::is_empty) {
                return Err("the http embedder needs providers.embedding_model".into());
            }
        }
        Ok(())
    }
}

/// Evolution budgets; adaptation settings come from the top-level section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSettings {
    pub candidate_budget: usize,
    pub max_iters: usize,
    pub patience: usize,
    pub split_ratio: f64,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        let d = EvolutionConfig::default();
        Self {
            candidate_budget: d.candidate_budget,
            max_iters: d.max_iters,
            patience: d.patience,
            split_ratio: d.split_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Registry file used by `query`, `evolve` and `inspect`.
    pub registry: String,
    pub graph: GraphConfig,
    pub adaptation: AdaptationConfig,
    pub evolution: EvolutionSettings,
    pub sim: SimConfig,
    pub providers: ProviderConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            registry: "registry.json".into(),
            graph: GraphConfig::default(),
            adaptation: AdaptationConfig::default(),
            evolution: EvolutionSettings::default(),
            sim: SimConfig::default(),
            providers: ProviderConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            candidate_budget: self.evolution.candidate_budget,
            max_iters: self.evolution.max_iters,
            patience: self.evolution.patience,
            split_ratio: self.evolution.split_ratio,
            adaptation: self.adaptation,
        }
    }

    /// Cross-field checks, run on every load. Simulation settings include
    /// `rho * b < 1`.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |section: &str, e: String| ConfigError::Invalid(format!("{section}: {e}"));
        self.graph.validate().map_err(|e| bad("graph", e))?;
        self.adaptation.validate().map_err(|e| bad("adaptation", e))?;
        self.evolution_config().validate().map_err(|e| bad("evolution", e))?;
        self.sim.validate().map_err(|e| bad("sim", e.to_string()))?;
        self.providers.validate().map_err(|e| bad("providers", e))?;
        if self.registry.is_empty() {
            return Err(bad("registry", "path must not be empty".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs serialize")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn partition_thresholds_must_be_ordered() {
        let text = "[adaptation.partition]\ntheta_full = 0.3\ntheta_part = 0.5\n";
        assert!(matches!(RunConfig::from_toml(text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn sim_rho_b_checked_at_load() {
        let text = "[sim]\nrho = 0.6\nbranching = 2\n";
        assert!(matches!(RunConfig::from_toml(text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn http_needs_base_url() {
        let text = "[providers]\nverifier = \"http\"\nmodel = \"m\"\n";
        let err = RunConfig::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("base_url"), "{err}");
        let ok = "[providers]\nverifier = \"http\"\nmodel = \"m\"\nbase_url = \"http://localhost:1\"\n";
        assert!(RunConfig::from_toml(ok).is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            RunConfig::from_toml("[providers]\napi_key = \"x\"\n"),
            Err(ConfigError::Parse(_))
        ));
    }
}
