//! Run configuration files: JSON with a closed schema (unknown keys are
//! rejected), validated before any side effect.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::ProviderConfig;
use crate::orchestrator::{SacOverrides, TaskSpec};

fn default_iterations() -> usize {
    5
}

fn default_attempts() -> usize {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub task: String,
    pub environment: String,
    /// Outer refinement iterations (K).
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Per-stage repair attempts (N).
    #[serde(default = "default_attempts")]
    pub attempts: usize,
    #[serde(default)]
    pub seed: u64,
    pub run_dir: PathBuf,
    #[serde(default)]
    pub sac: SacOverrides,
    pub llm: ProviderConfig,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Invalid {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Semantic { path: String, message: String },
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<RunConfigFile, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: RunConfigFile =
            serde_json::from_str(&text).map_err(|e| ConfigError::Invalid {
                path: path.display().to_string(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        let spec = config.task_spec();
        spec.validate().map_err(|e| ConfigError::Semantic {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(config)
    }

    pub fn task_spec(&self) -> TaskSpec {
        TaskSpec {
            task: self.task.clone(),
            environment: self.environment.clone(),
            outer_iterations: self.iterations,
            inner_attempts: self.attempts,
            sac: self.sac.clone(),
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(
            &path,
            r#"{
  "task": "move forward",
  "environment": "pointmass",
  "run_dir": "runs/forward",
  "llm": { "mode": "stub:happy_path" }
}"#,
        )
        .unwrap();
        let config = RunConfigFile::load(&path).unwrap();
        assert_eq!(config.iterations, 5);
        assert_eq!(config.attempts, 3);
        assert_eq!(config.seed, 0);
    }

    #[test]
    fn unknown_keys_rejected_with_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(
            &path,
            "{\n  \"task\": \"t\",\n  \"environment\": \"pointmass\",\n  \"run_dir\": \"r\",\n  \"llm\": { \"mode\": \"stub:happy_path\" },\n  \"tsak\": 1\n}",
        )
        .unwrap();
        match RunConfigFile::load(&path) {
            Err(ConfigError::Invalid { line, message, .. }) => {
                assert!(message.contains("tsak"), "{message}");
                assert!(line >= 6, "line {line}");
            }
            other => panic!("expected invalid config, got {other:?}"),
        }
    }

    #[test]
    fn unknown_environment_is_a_semantic_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(
            &path,
            r#"{"task": "t", "environment": "walker2d", "run_dir": "r", "llm": {"mode": "stub:happy_path"}}"#,
        )
        .unwrap();
        assert!(matches!(
            RunConfigFile::load(&path),
            Err(ConfigError::Semantic { .. })
        ));
    }
}
