//! Persistent run state: the task, per-iteration records and run status,
//! written atomically to `state.json` after every completed stage so an
//! interrupted run resumes at the stage it stopped in.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs;
use crate::llm::{ChatMessage, Verdict};
use crate::sac::SacConfig;
use crate::util;

pub const STATE_VERSION: u32 = 1;

/// Optional overrides applied on top of the per-environment SAC defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SacOverrides {
    #[serde(default)]
    pub total_steps: Option<usize>,
    #[serde(default)]
    pub warmup_steps: Option<usize>,
    #[serde(default)]
    pub replay_capacity: Option<usize>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub updates_per_step: Option<usize>,
    #[serde(default)]
    pub eval_interval: Option<usize>,
    #[serde(default)]
    pub eval_episodes: Option<usize>,
    #[serde(default)]
    pub hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
}

impl SacOverrides {
    pub fn apply(&self, config: &mut SacConfig) {
        if let Some(v) = self.total_steps {
            config.total_steps = v;
        }
        if let Some(v) = self.warmup_steps {
            config.warmup_steps = v;
        }
        if let Some(v) = self.replay_capacity {
            config.replay_capacity = v;
        }
        if let Some(v) = self.batch_size {
            config.batch_size = v;
        }
        if let Some(v) = self.updates_per_step {
            config.updates_per_step = v;
        }
        if let Some(v) = self.eval_interval {
            config.eval_interval = v;
        }
        if let Some(v) = self.eval_episodes {
            config.eval_episodes = v;
        }
        if let Some(v) = &self.hidden {
            config.hidden = v.clone();
        }
        if let Some(v) = self.gamma {
            config.gamma = v;
        }
        if let Some(v) = self.tau {
            config.tau = v;
        }
    }
}

/// What to learn, where, and with what budgets.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    /// Natural-language task description.
    pub task: String,
    pub environment: String,
    /// Outer refinement iterations (K).
    pub outer_iterations: usize,
    /// Per-stage repair attempts (N).
    pub inner_attempts: usize,
    #[serde(default)]
    pub sac: SacOverrides,
    pub seed: u64,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), StateError> {
        if self.task.trim().is_empty() {
            return Err(StateError::Invalid("task description is empty".into()));
        }
        if self.outer_iterations == 0 || self.inner_attempts == 0 {
            return Err(StateError::Invalid(
                "iteration and attempt budgets must be >= 1".into(),
            ));
        }
        envs::schema(&self.environment)
            .map_err(|e| StateError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// Effective SAC config: environment defaults, overrides, run seed.
    pub fn sac_config(&self) -> SacConfig {
        let mut config = SacConfig::for_env(&self.environment).expect("validated environment");
        self.sac.apply(&mut config);
        config.seed = self.seed;
        config
    }
}

/// One LLM exchange within a stage: the exact prompt, its digest, the raw
/// response and how the attempt ended (`error` empty means accepted).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageAttempt {
    pub prompt: Vec<ChatMessage>,
    pub prompt_digest: String,
    pub response: String,
    #[serde(default)]
    pub error: Option<String>,
}

impl StageAttempt {
    pub fn accepted(&self) -> bool {
        self.error.is_none()
    }
}

/// Everything produced by one pass of the outer loop.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub started_at_unix: f64,
    #[serde(default)]
    pub finished_at_unix: Option<f64>,
    #[serde(default)]
    pub describe_attempts: Vec<StageAttempt>,
    #[serde(default)]
    pub env_description: Option<String>,
    #[serde(default)]
    pub reward_attempts: Vec<StageAttempt>,
    /// Canonical source of the accepted reward program.
    #[serde(default)]
    pub reward_program: Option<String>,
    #[serde(default)]
    pub training_log: Option<String>,
    #[serde(default)]
    pub checkpoint: Option<String>,
    #[serde(default)]
    pub final_eval_return: Option<f64>,
    #[serde(default)]
    pub eval_attempts: Vec<StageAttempt>,
    #[serde(default)]
    pub eval_program: Option<String>,
    #[serde(default)]
    pub performance: Option<String>,
    #[serde(default)]
    pub review_attempts: Vec<StageAttempt>,
    #[serde(default)]
    pub verdict: Option<Verdict>,
}

impl IterationRecord {
    pub fn new(index: usize) -> Self {
        IterationRecord {
            index,
            started_at_unix: now_unix(),
            ..Default::default()
        }
    }

    pub fn dir_name(&self) -> String {
        format!("iter_{:03}", self.index)
    }

    pub fn complete(&self) -> bool {
        self.verdict.is_some()
    }
}

pub fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Satisfied,
    Exhausted,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureInfo {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunState {
    pub version: u32,
    pub run_id: String,
    pub task: TaskSpec,
    pub status: RunStatus,
    pub iterations: Vec<IterationRecord>,
    #[serde(default)]
    pub best_checkpoint: Option<String>,
    /// LLM calls made by completed stages; the resume cursor.
    pub llm_calls: u64,
    #[serde(default)]
    pub failure: Option<FailureInfo>,
}

impl RunState {
    pub fn new(run_id: String, task: TaskSpec) -> Self {
        RunState {
            version: STATE_VERSION,
            run_id,
            task,
            status: RunStatus::Running,
            iterations: Vec::new(),
            best_checkpoint: None,
            llm_calls: 0,
            failure: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum StateError {
    #[error("invalid task spec: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: cannot parse: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: unsupported state version {got} (this build reads {want})")]
    Version { path: String, got: u32, want: u32 },
    #[error("{path}: referenced artifact is missing or corrupt: {detail}")]
    Artifact { path: String, detail: String },
}

pub fn state_path(run_dir: &Path) -> PathBuf {
    run_dir.join("state.json")
}

pub fn save_state(run_dir: &Path, state: &RunState) -> Result<(), StateError> {
    let path = state_path(run_dir);
    let json = serde_json::to_string_pretty(state).expect("state serializes");
    util::write_atomic(&path, json.as_bytes()).map_err(|source| StateError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Load and deeply validate a run directory: the state file itself, then
/// every artifact it references, so corruption is reported with the file
/// path instead of surfacing later mid-run.
pub fn load_state(run_dir: &Path) -> Result<RunState, StateError> {
    let path = state_path(run_dir);
    let text = std::fs::read_to_string(&path).map_err(|source| StateError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let probe: serde_json::Value =
        serde_json::from_str(&text).map_err(|source| StateError::Parse {
            path: path.display().to_string(),
            source,
        })?;
    let version = probe.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != STATE_VERSION {
        return Err(StateError::Version {
            path: path.display().to_string(),
            got: version,
            want: STATE_VERSION,
        });
    }
    let state: RunState = serde_json::from_str(&text).map_err(|source| StateError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    state.task.validate()?;
    for record in &state.iterations {
        validate_artifacts(run_dir, record)?;
    }
    Ok(state)
}

fn validate_artifacts(run_dir: &Path, record: &IterationRecord) -> Result<(), StateError> {
    let describe = |rel: &str| run_dir.join(rel).display().to_string();
    if let Some(rel) = &record.performance {
        let path = run_dir.join(rel);
        let text = std::fs::read_to_string(&path).map_err(|e| StateError::Artifact {
            path: describe(rel),
            detail: e.to_string(),
        })?;
        serde_json::from_str::<crate::dsl::PerformanceReport>(&text).map_err(|e| {
            StateError::Artifact {
                path: describe(rel),
                detail: e.to_string(),
            }
        })?;
    }
    if let Some(rel) = &record.checkpoint {
        crate::sac::PolicyCheckpoint::load(&run_dir.join(rel)).map_err(|e| {
            StateError::Artifact {
                path: describe(rel),
                detail: e.to_string(),
            }
        })?;
    }
    if let Some(rel) = &record.training_log {
        let text = std::fs::read_to_string(run_dir.join(rel)).map_err(|e| StateError::Artifact {
            path: describe(rel),
            detail: e.to_string(),
        })?;
        crate::sac::TrainingLog::from_csv(&text).ok_or_else(|| StateError::Artifact {
            path: describe(rel),
            detail: "cannot parse training log CSV".into(),
        })?;
    }
    if let Some(source) = &record.reward_program {
        crate::dsl::parse_reward(source).map_err(|e| StateError::Artifact {
            path: format!("{} reward program", record.dir_name()),
            detail: e.to_string(),
        })?;
    }
    if let Some(source) = &record.eval_program {
        crate::dsl::parse_eval(source).map_err(|e| StateError::Artifact {
            path: format!("{} eval program", record.dir_name()),
            detail: e.to_string(),
        })?;
    }
    Ok(())
}
