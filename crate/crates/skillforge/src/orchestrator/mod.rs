//! The outer refinement loop: describe the environment, generate a reward
//! program, train, roll out, generate an evaluation program, measure,
//! review — repeating on the reviewer's suggestions until satisfied or out
//! of budget. Every stage persists its artifacts before the next begins,
//! and a run resumes at the first incomplete stage.

pub mod stages;
mod state;

pub use stages::{StageFailure, StageResult};
pub use state::{
    load_state, now_unix, save_state, state_path, FailureInfo, IterationRecord, RunState,
    RunStatus, SacOverrides, StageAttempt, StateError, TaskSpec, STATE_VERSION,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dsl::{self, MetricsError, PerformanceReport};
use crate::envs::{self, EnvSchema};
use crate::llm::{prompts, LlmClient, LlmError, ProviderConfig, TrainingSummary};
use crate::sac::{self, CheckpointPolicy, PolicyCheckpoint};
use crate::util;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("cannot create LLM client: {0}")]
    Client(#[from] LlmError),
    #[error("run directory {0} already contains a run; use resume")]
    AlreadyExists(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Deterministic seed base for an iteration's evaluation rollouts.
pub fn evaluation_seed_base(run_seed: u64, iteration: usize) -> u64 {
    run_seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407)
        .wrapping_add(iteration as u64)
}

/// Episodes used for every iteration's performance report.
pub const EVALUATION_EPISODES: usize = 10;

/// Drives one run to a terminal status. Owns the run directory, the state
/// file and the LLM client; a failure in any stage marks the run failed
/// with the stage name and persists the forensic record.
pub struct Runner {
    run_dir: PathBuf,
    state: RunState,
    llm: LlmClient,
}

impl Runner {
    /// Start a fresh run. The directory may exist but must not contain a
    /// state file.
    pub fn create(
        run_dir: &Path,
        task: TaskSpec,
        provider: ProviderConfig,
    ) -> Result<Runner, OrchestratorError> {
        task.validate()?;
        if state_path(run_dir).exists() {
            return Err(OrchestratorError::AlreadyExists(run_dir.to_path_buf()));
        }
        std::fs::create_dir_all(run_dir).map_err(|source| OrchestratorError::Io {
            path: run_dir.display().to_string(),
            source,
        })?;
        let llm = build_client(run_dir, provider)?;
        let run_id = run_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        let state = RunState::new(run_id, task);
        save_state(run_dir, &state)?;
        Ok(Runner {
            run_dir: run_dir.to_path_buf(),
            state,
            llm,
        })
    }

    /// Reopen an interrupted or failed run and position the LLM client at
    /// the first call the completed stages have not already made.
    pub fn resume(run_dir: &Path, provider: ProviderConfig) -> Result<Runner, OrchestratorError> {
        let mut state = load_state(run_dir)?;
        let mut llm = build_client(run_dir, provider)?;
        llm.seek(state.llm_calls)?;
        if state.status == RunStatus::Failed {
            state.status = RunStatus::Running;
            state.failure = None;
        }
        Ok(Runner {
            run_dir: run_dir.to_path_buf(),
            state,
            llm,
        })
    }

    pub fn state(&self) -> &RunState {
        &self.state
    }

    pub fn run_dir(&self) -> &Path {
        &self.run_dir
    }

    /// Execute until satisfied, exhausted or failed. The returned state is
    /// also persisted.
    pub fn run(&mut self) -> Result<&RunState, OrchestratorError> {
        while self.state.status == RunStatus::Running {
            let incomplete = self
                .state
                .iterations
                .last()
                .map(|r| !r.complete())
                .unwrap_or(false);
            if !incomplete {
                if let Some(last) = self.state.iterations.last() {
                    if last.verdict.as_ref().map(|v| v.satisfied).unwrap_or(false) {
                        self.state.best_checkpoint = last.checkpoint.clone();
                        self.state.status = RunStatus::Satisfied;
                        save_state(&self.run_dir, &self.state)?;
                        break;
                    }
                }
                if self.state.iterations.len() >= self.state.task.outer_iterations {
                    // Out of budget: the best checkpoint is the latest
                    // reviewed one.
                    self.state.best_checkpoint = self
                        .state
                        .iterations
                        .iter()
                        .rev()
                        .find_map(|r| r.checkpoint.clone());
                    self.state.status = RunStatus::Exhausted;
                    save_state(&self.run_dir, &self.state)?;
                    break;
                }
                let index = self.state.iterations.len();
                self.state.iterations.push(IterationRecord::new(index));
                save_state(&self.run_dir, &self.state)?;
            }
            self.advance_iteration()?;
        }
        Ok(&self.state)
    }

    /// Suggestions consumed by the current iteration: the previous
    /// verdict's, or empty at iteration 0.
    fn current_suggestions(&self) -> String {
        let idx = self.state.iterations.len().saturating_sub(1);
        if idx == 0 {
            return String::new();
        }
        self.state.iterations[idx - 1]
            .verdict
            .as_ref()
            .map(|v| v.effective_suggestions().to_string())
            .unwrap_or_default()
    }

    fn iter_dir(&self, record: &IterationRecord) -> PathBuf {
        self.run_dir.join(record.dir_name())
    }

    fn fail(&mut self, stage: &str, message: String) -> Result<(), OrchestratorError> {
        self.state.status = RunStatus::Failed;
        self.state.failure = Some(FailureInfo {
            stage: stage.to_string(),
            message,
        });
        save_state(&self.run_dir, &self.state)?;
        Ok(())
    }

    fn write_artifact(&self, rel: &str, bytes: &[u8]) -> Result<(), OrchestratorError> {
        let path = self.run_dir.join(rel);
        util::write_atomic(&path, bytes).map_err(|source| OrchestratorError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    fn write_prompts(
        &self,
        record: &IterationRecord,
        prefix: &str,
        attempts: &[StageAttempt],
    ) -> Result<(), OrchestratorError> {
        for (i, attempt) in attempts.iter().enumerate() {
            let rel = format!("{}/prompts/{prefix}_{i:02}.json", record.dir_name());
            let json = serde_json::to_string_pretty(&attempt.prompt).expect("prompt serializes");
            self.write_artifact(&rel, json.as_bytes())?;
        }
        Ok(())
    }

    /// Run every missing stage of the last iteration record, in order,
    /// persisting after each one.
    fn advance_iteration(&mut self) -> Result<(), OrchestratorError> {
        let idx = self.state.iterations.len() - 1;
        let schema = envs::schema(&self.state.task.environment).expect("validated environment");
        let suggestions = self.current_suggestions();
        let budget = self.state.task.inner_attempts;

        if self.state.iterations[idx].env_description.is_none()
            && !self.stage_describe(idx, &schema, &suggestions, budget)?
        {
            return Ok(());
        }
        if self.state.iterations[idx].checkpoint.is_none()
            && !self.stage_reward_and_train(idx, &schema, &suggestions, budget)?
        {
            return Ok(());
        }
        if self.state.iterations[idx].performance.is_none()
            && !self.stage_rollout_and_metrics(idx, &schema, &suggestions, budget)?
        {
            return Ok(());
        }
        if self.state.iterations[idx].verdict.is_none() && !self.stage_review(idx, budget)? {
            return Ok(());
        }
        Ok(())
    }

    /// Environment-explanation stage. Returns false when the run failed.
    fn stage_describe(
        &mut self,
        idx: usize,
        schema: &EnvSchema,
        suggestions: &str,
        budget: usize,
    ) -> Result<bool, OrchestratorError> {
        match stages::describe_environment(schema, suggestions, &mut self.llm, budget) {
            Ok(result) => {
                let record = &self.state.iterations[idx];
                let rel = format!("{}/env_description.txt", record.dir_name());
                self.write_artifact(&rel, result.value.as_bytes())?;
                self.write_prompts(&self.state.iterations[idx].clone(), "describe", &result.attempts)?;
                let record = &mut self.state.iterations[idx];
                record.describe_attempts = result.attempts;
                record.env_description = Some(result.value);
                self.state.llm_calls = self.llm.calls();
                save_state(&self.run_dir, &self.state)?;
                Ok(true)
            }
            Err(failure) => {
                let (stage, message) = describe_failure(&failure);
                if let StageFailure::Exhausted { attempts, .. } = failure {
                    self.write_prompts(&self.state.iterations[idx].clone(), "describe", &attempts)?;
                    self.state.iterations[idx].describe_attempts = attempts;
                }
                self.state.llm_calls = self.llm.calls();
                self.fail(stage, message)?;
                Ok(false)
            }
        }
    }

    /// Reward generation plus training, with runtime reward failures routed
    /// back into the repair loop while attempt budget remains.
    fn stage_reward_and_train(
        &mut self,
        idx: usize,
        schema: &EnvSchema,
        suggestions: &str,
        budget: usize,
    ) -> Result<bool, OrchestratorError> {
        let task_text = self.state.task.task.clone();
        let env_description = self.state.iterations[idx]
            .env_description
            .clone()
            .expect("describe stage ran");
        let example = prompts::example_reward(&schema.name).unwrap_or("");
        let config = self.state.task.sac_config();
        let dir_name = self.state.iterations[idx].dir_name();

        let mut attempts: Vec<StageAttempt> = Vec::new();
        let mut prev_program = String::new();
        let mut prev_error = String::new();
        loop {
            let remaining = budget - attempts.len();
            if remaining == 0 {
                self.write_prompts(&self.state.iterations[idx].clone(), "reward", &attempts)?;
                self.state.iterations[idx].reward_attempts = attempts;
                self.state.llm_calls = self.llm.calls();
                self.fail(
                    "generate_reward_program",
                    format!("all {budget} attempts failed; last error: {prev_error}"),
                )?;
                return Ok(false);
            }
            let result = stages::generate_reward_program(
                &task_text,
                &env_description,
                schema,
                example,
                suggestions,
                &mut self.llm,
                remaining,
                &prev_program,
                &prev_error,
            );
            let program = match result {
                Ok(r) => {
                    attempts.extend(r.attempts);
                    r.value
                }
                Err(failure) => {
                    let (stage, message) = describe_failure(&failure);
                    if let StageFailure::Exhausted { attempts: a, .. } = failure {
                        attempts.extend(a);
                    }
                    self.write_prompts(&self.state.iterations[idx].clone(), "reward", &attempts)?;
                    self.state.iterations[idx].reward_attempts = attempts;
                    self.state.llm_calls = self.llm.calls();
                    self.fail(stage, message)?;
                    return Ok(false);
                }
            };
            let canonical = dsl::print_reward(&program);
            // The accepted program is persisted before training starts; a
            // runtime repair replaces it, since the stage only completes
            // once a program survives training.
            self.write_artifact(&format!("{dir_name}/reward_program.rdsl"), canonical.as_bytes())?;
            match sac::train(&schema.name, &program, &config) {
                Ok((checkpoint, log)) => {
                    let ckpt_rel = format!("{dir_name}/checkpoint.json");
                    let log_rel = format!("{dir_name}/training_log.csv");
                    checkpoint.save(&self.run_dir.join(&ckpt_rel)).map_err(|e| {
                        OrchestratorError::Io {
                            path: ckpt_rel.clone(),
                            source: std::io::Error::other(e.to_string()),
                        }
                    })?;
                    self.write_artifact(&log_rel, log.to_csv().as_bytes())?;
                    self.write_prompts(&self.state.iterations[idx].clone(), "reward", &attempts)?;
                    let record = &mut self.state.iterations[idx];
                    record.reward_attempts = attempts;
                    record.reward_program = Some(canonical);
                    record.checkpoint = Some(ckpt_rel);
                    record.training_log = Some(log_rel);
                    record.final_eval_return = log.final_eval_return();
                    self.state.llm_calls = self.llm.calls();
                    save_state(&self.run_dir, &self.state)?;
                    return Ok(true);
                }
                Err(e) => match e.as_dsl() {
                    Some(dsl_err) => {
                        let message = format!("runtime failure during training: {dsl_err}");
                        if let Some(last) = attempts.last_mut() {
                            last.error = Some(message.clone());
                        }
                        prev_program = canonical;
                        prev_error = dsl_err.to_string();
                    }
                    None => {
                        self.write_prompts(&self.state.iterations[idx].clone(), "reward", &attempts)?;
                        self.state.iterations[idx].reward_attempts = attempts;
                        self.state.llm_calls = self.llm.calls();
                        self.fail("train", e.to_string())?;
                        return Ok(false);
                    }
                },
            }
        }
    }

    /// Deterministic evaluation rollouts, then metric-program generation
    /// with measurement failures routed back into the repair loop.
    fn stage_rollout_and_metrics(
        &mut self,
        idx: usize,
        schema: &EnvSchema,
        suggestions: &str,
        budget: usize,
    ) -> Result<bool, OrchestratorError> {
        let record = self.state.iterations[idx].clone();
        let dir_name = record.dir_name();
        let ckpt_rel = record.checkpoint.clone().expect("training stage ran");
        let checkpoint = match PolicyCheckpoint::load(&self.run_dir.join(&ckpt_rel)) {
            Ok(c) => c,
            Err(e) => {
                self.fail("rollout", e.to_string())?;
                return Ok(false);
            }
        };
        let reward_source = record.reward_program.clone().expect("training stage ran");
        let program = dsl::parse_reward(&reward_source).expect("persisted program parses");

        let mut env = envs::make_env(&schema.name).expect("validated environment");
        let base_seed = evaluation_seed_base(self.state.task.seed, idx);
        let mut policy = CheckpointPolicy {
            checkpoint: &checkpoint,
        };
        let trajectories = match envs::rollout(
            env.as_mut(),
            &mut policy,
            &program,
            EVALUATION_EPISODES,
            base_seed,
        ) {
            Ok(t) => t,
            Err(e) => {
                self.fail("rollout", e.to_string())?;
                return Ok(false);
            }
        };
        let traj_dir = self.iter_dir(&record).join("trajectories");
        envs::save_trajectories(
            &traj_dir,
            &trajectories,
            schema,
            base_seed,
            &checkpoint.reward_program_sha256,
        )
        .map_err(|source| OrchestratorError::Io {
            path: traj_dir.display().to_string(),
            source,
        })?;

        let task_text = self.state.task.task.clone();
        let env_description = record.env_description.clone().expect("describe stage ran");
        let example = prompts::example_eval(&schema.name).unwrap_or("");
        let summary = TrainingSummary {
            environment: schema.name.clone(),
            total_steps: checkpoint.train_steps as usize,
            final_eval_return: record.final_eval_return.unwrap_or(0.0),
            reward_source: reward_source.clone(),
        };
        let checkpoint_id = format!("iter{idx:03}-step{}", checkpoint.train_steps);

        let mut attempts: Vec<StageAttempt> = Vec::new();
        let mut prev_program = String::new();
        let mut prev_error = String::new();
        loop {
            let remaining = budget - attempts.len();
            if remaining == 0 {
                self.write_prompts(&record, "eval", &attempts)?;
                self.state.iterations[idx].eval_attempts = attempts;
                self.state.llm_calls = self.llm.calls();
                self.fail(
                    "generate_eval_program",
                    format!("all {budget} attempts failed; last error: {prev_error}"),
                )?;
                return Ok(false);
            }
            let result = stages::generate_eval_program(
                &task_text,
                &env_description,
                schema,
                example,
                suggestions,
                &summary,
                &mut self.llm,
                remaining,
                &prev_program,
                &prev_error,
            );
            let eval_program = match result {
                Ok(r) => {
                    attempts.extend(r.attempts);
                    r.value
                }
                Err(failure) => {
                    let (stage, message) = describe_failure(&failure);
                    if let StageFailure::Exhausted { attempts: a, .. } = failure {
                        attempts.extend(a);
                    }
                    self.write_prompts(&record, "eval", &attempts)?;
                    self.state.iterations[idx].eval_attempts = attempts;
                    self.state.llm_calls = self.llm.calls();
                    self.fail(stage, message)?;
                    return Ok(false);
                }
            };
            let canonical = dsl::print_eval(&eval_program);
            self.write_artifact(&format!("{dir_name}/eval_program.edsl"), canonical.as_bytes())?;
            match dsl::eval_metrics(&eval_program, schema, &trajectories, &checkpoint_id) {
                Ok(report) => {
                    let report_rel = format!("{dir_name}/performance.json");
                    let json = serde_json::to_string_pretty(&report).expect("report serializes");
                    self.write_artifact(&report_rel, json.as_bytes())?;
                    self.write_prompts(&record, "eval", &attempts)?;
                    let rec = &mut self.state.iterations[idx];
                    rec.eval_attempts = attempts;
                    rec.eval_program = Some(canonical);
                    rec.performance = Some(report_rel);
                    self.state.llm_calls = self.llm.calls();
                    save_state(&self.run_dir, &self.state)?;
                    return Ok(true);
                }
                Err(MetricsError::EmptyTrajectories) => {
                    self.fail("eval_metrics", MetricsError::EmptyTrajectories.to_string())?;
                    return Ok(false);
                }
                Err(e) => {
                    // Runtime metric failures repair exactly like parse
                    // failures, while budget remains.
                    let message = format!("runtime failure while measuring: {e}");
                    if let Some(last) = attempts.last_mut() {
                        last.error = Some(message.clone());
                    }
                    prev_program = canonical;
                    prev_error = match e {
                        MetricsError::Step { source, .. } => source.to_string(),
                        MetricsError::Aggregate { source, .. } => source.to_string(),
                        MetricsError::EmptyTrajectories => unreachable!(),
                    };
                }
            }
        }
    }

    /// Review stage: render the report, ask for a verdict, persist it.
    fn stage_review(&mut self, idx: usize, budget: usize) -> Result<bool, OrchestratorError> {
        let record = self.state.iterations[idx].clone();
        let dir_name = record.dir_name();
        let report_rel = record.performance.clone().expect("metrics stage ran");
        let report: PerformanceReport = serde_json::from_str(
            &std::fs::read_to_string(self.run_dir.join(&report_rel)).map_err(|source| {
                OrchestratorError::Io {
                    path: report_rel.clone(),
                    source,
                }
            })?,
        )
        .expect("persisted report parses");

        let example = prompts::example_pair(&self.state.task.environment).unwrap_or_default();
        let result = stages::assess_performance(
            &self.state.task.task,
            record.env_description.as_deref().expect("describe stage ran"),
            &example,
            record.reward_program.as_deref().expect("training stage ran"),
            record.eval_program.as_deref().expect("metrics stage ran"),
            &report,
            &mut self.llm,
            budget,
        );
        match result {
            Ok(r) => {
                let json = serde_json::to_string_pretty(&r.value).expect("verdict serializes");
                self.write_artifact(&format!("{dir_name}/pe_verdict.json"), json.as_bytes())?;
                self.write_prompts(&record, "review", &r.attempts)?;
                let rec = &mut self.state.iterations[idx];
                rec.review_attempts = r.attempts;
                rec.verdict = Some(r.value);
                rec.finished_at_unix = Some(now_unix());
                self.state.llm_calls = self.llm.calls();
                save_state(&self.run_dir, &self.state)?;
                Ok(true)
            }
            Err(failure) => {
                let (stage, message) = describe_failure(&failure);
                if let StageFailure::Exhausted { attempts, .. } = failure {
                    self.write_prompts(&record, "review", &attempts)?;
                    self.state.iterations[idx].review_attempts = attempts;
                }
                self.state.llm_calls = self.llm.calls();
                self.fail(stage, message)?;
                Ok(false)
            }
        }
    }
}

fn describe_failure(failure: &StageFailure) -> (&'static str, String) {
    match failure {
        StageFailure::Exhausted { stage, .. } => (stage, failure.to_string()),
        StageFailure::Llm { stage, source } => (stage, source.to_string()),
    }
}

/// Resolve the cassette path against the run directory and open the client.
fn build_client(run_dir: &Path, mut provider: ProviderConfig) -> Result<LlmClient, LlmError> {
    use crate::llm::Mode;
    if matches!(provider.mode, Mode::Record | Mode::Replay) {
        let p = provider
            .cassette
            .take()
            .unwrap_or_else(|| PathBuf::from("cassette.jsonl"));
        provider.cassette = Some(if p.is_absolute() { p } else { run_dir.join(p) });
    }
    LlmClient::new(provider)
}

/// User-message content of one attempt, for tests that inspect prompt
/// dataflow.
pub fn attempt_user_content(attempt: &StageAttempt) -> &str {
    attempt
        .prompt
        .iter()
        .find(|m| m.role == crate::llm::Role::User)
        .map(|m| m.content.as_str())
        .unwrap_or("")
}
