//! Engine configuration: one versioned TOML file, defaults embedded.
//!
//! Every section is optional; unknown keys anywhere are rejected. The annotated
//! default file is `data/default_config.toml`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::ContentConfig;
use crate::manifest::FEATURE_NAMES;
use crate::models::EnsembleParams;
use crate::pipeline::FeatureConfig;
use crate::reputation::DEFAULT_TTL_SECONDS;
use crate::scoring::ScoringConfig;
use crate::session::SessionConfig;

pub const CONFIG_FORMAT_VERSION: u32 = 1;

/// Environment variable naming a config file when no path is given explicitly.
pub const CONFIG_ENV: &str = "SENTINEL_CONFIG";

pub const DEFAULT_CONFIG_TOML: &str = include_str!("../data/default_config.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {reason}")]
    Invalid { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoreConfig {
    pub path: Option<PathBuf>,
    pub ttl_seconds: u64,
    pub seed_list: Option<PathBuf>,
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig {
            path: None,
            ttl_seconds: DEFAULT_TTL_SECONDS,
            seed_list: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    /// Explanation entries returned by the analyze endpoint.
    pub explanation_top_n: usize,
    /// Optional domain-metadata fixture file for the provider.
    pub metadata_fixture: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            explanation_top_n: 5,
            metadata_fixture: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub format_version: u32,
    /// Must equal the built-in feature layout when present.
    pub manifest: Vec<String>,
    pub features: FeatureConfig,
    pub content: ContentConfig,
    pub session: SessionConfig,
    pub scoring: ScoringConfig,
    pub models: EnsembleParams,
    pub store: StoreConfig,
    pub service: ServiceConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            format_version: CONFIG_FORMAT_VERSION,
            manifest: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            features: FeatureConfig::default(),
            content: ContentConfig::default(),
            session: SessionConfig::default(),
            scoring: ScoringConfig::default(),
            models: EnsembleParams::default(),
            store: StoreConfig::default(),
            service: ServiceConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let invalid = |reason: String| ConfigError::Invalid {
            path: origin.to_string(),
            reason,
        };
        let cfg: EngineConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate().map_err(invalid)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// `explicit` if given, else the file named by `SENTINEL_CONFIG`, else the
    /// embedded defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        if let Some(p) = explicit {
            return Self::load(p);
        }
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Self::from_toml(DEFAULT_CONFIG_TOML, "<embedded defaults>"),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.format_version != CONFIG_FORMAT_VERSION {
            return Err(format!(
                "format_version {} is not supported; expected {CONFIG_FORMAT_VERSION}",
                self.format_version
            ));
        }
        if self
            .manifest
            .iter()
            .map(String::as_str)
            .ne(FEATURE_NAMES.iter().copied())
        {
            return Err("manifest must list the built-in features in order".into());
        }
        self.models
            .weights
            .validate()
            .map_err(|e| format!("models.weights: {e}"))?;
        self.scoring
            .validate()
            .map_err(|e| format!("scoring: {e}"))?;
        if self.store.ttl_seconds == 0 {
            return Err("store.ttl_seconds must be > 0".into());
        }
        if self.session.rapid_redirect_ms < 0 || self.session.hidden_redirect_lookback_ms < 0 {
            return Err("session thresholds must be >= 0".into());
        }
        if self.features.young_days <= 0 {
            return Err("features.young_days must be > 0".into());
        }
        Ok(())
    }
}
