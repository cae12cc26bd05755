use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::answer::AnswerOptions;
use crate::error::{Error, Result};
use crate::sbt::SbtConfig;
use crate::tokenize::TokenizerMode;
use crate::trajectory::DEFAULT_BOUNDARY_CUES;

pub const DEFAULT_MAX_CONTEXT_TOKENS: u64 = 16_384;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterPolicy {
    pub max_context_tokens: u64,
    pub reject_multiple_close_tags: bool,
    pub require_think_segment: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            max_context_tokens: DEFAULT_MAX_CONTEXT_TOKENS,
            reject_multiple_close_tags: true,
            require_think_segment: true,
        }
    }
}

/// Source field names. When `generation` is absent the last assistant turn
/// of `messages` is used, then the first entry of `generations`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaMap {
    /// Falls back to `uuid`, then to `line-<n>`.
    pub id: String,
    /// Falls back to the first user turn of `messages`.
    pub problem: String,
    pub answer: String,
    pub generation: String,
    pub messages: String,
    pub token_count: String,
}

impl Default for SchemaMap {
    fn default() -> Self {
        SchemaMap {
            id: "id".into(),
            problem: "problem".into(),
            answer: "answer".into(),
            generation: "generation".into(),
            messages: "messages".into(),
            token_count: "token_count".into(),
        }
    }
}

/// Everything a pipeline run depends on; serialized as the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub sbt: SbtConfig,
    pub filter: FilterPolicy,
    pub schema_map: SchemaMap,
    pub tokenizer: TokenizerMode,
    pub answer: AnswerOptions,
    pub boundary_cues: Vec<String>,
    /// Marker lexicon file; the built-in list when unset.
    pub lexicon: Option<PathBuf>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sbt: SbtConfig::default(),
            filter: FilterPolicy::default(),
            schema_map: SchemaMap::default(),
            tokenizer: TokenizerMode::default(),
            answer: AnswerOptions::default(),
            boundary_cues: DEFAULT_BOUNDARY_CUES.iter().map(|s| s.to_string()).collect(),
            lexicon: None,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(source: &str) -> Result<Self> {
        serde_json::from_str(source).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let source = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&source).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.sbt.validate()?;
        if self.filter.max_context_tokens == 0 {
            return Err(Error::Config("max_context_tokens must be positive".into()));
        }
        if self.boundary_cues.iter().all(|c| c.trim().is_empty()) {
            return Err(Error::Config("boundary_cues must not be empty".into()));
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_json(&cfg.to_json_pretty()).unwrap(), cfg);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let cfg = PipelineConfig::from_json(r#"{"sbt": {"tau1": 0.3, "strategy": "sbt-e"}, "seed": 9}"#).unwrap();
        assert_eq!(cfg.sbt.tau1, 0.3);
        assert_eq!(cfg.sbt.beta, 0.1);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.filter.max_context_tokens, 16_384);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(PipelineConfig::from_json(r#"{"sbt": {"tau": 0.3}}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"workers": 3}"#).is_err());
    }
}
