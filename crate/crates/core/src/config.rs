//! `d4l.toml` run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::ContextConfig;
use crate::dataset::MiningConfig;
use crate::evaluator::EvaluationConfig;
use crate::gateway::ModelConfig;
use crate::log_extractor::ExtractorConfig;
use crate::prompt::PromptConfig;
use crate::rules::RulesConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("invalid config {path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("config references missing path {0}")]
    MissingPath(PathBuf),
}

/// All sections are optional; missing keys take their defaults and unknown
/// keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Taxonomy data file; the built-in taxonomy is used when unset.
    pub taxonomy: Option<PathBuf>,
    pub extractor: ExtractorConfig,
    pub context: ContextConfig,
    pub rules: RulesConfig,
    pub prompt: PromptConfig,
    pub model: ModelConfig,
    pub evaluation: EvaluationConfig,
    pub mining: MiningConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid { path: origin.to_string(), reason: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// Checks that referenced files and directories exist.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for p in self.taxonomy.iter().chain(self.prompt.template_dir.iter()) {
            if !p.exists() {
                return Err(ConfigError::MissingPath(p.clone()));
            }
        }
        if self.model.temperature < 0.0 {
            return Err(ConfigError::Invalid { path: "[model]".into(), reason: "temperature must be >= 0".into() });
        }
        if self.evaluation.parallelism == 0 {
            return Err(ConfigError::Invalid {
                path: "[evaluation]".into(),
                reason: "parallelism must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Compact single-line JSON of the effective configuration.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
