//! Batch runs over a task list with an aggregate success table.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::ProviderConfig;
use crate::orchestrator::{Runner, RunStatus, SacOverrides, TaskSpec};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchTask {
    pub task: String,
    pub environment: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub task: String,
    pub environment: String,
    pub status: String,
    pub iterations_used: usize,
    /// Verdict of the very first iteration: the no-refinement baseline.
    pub first_iteration_satisfied: Option<bool>,
    pub headline_metric: Option<String>,
    pub headline_mean: Option<f64>,
    pub run_dir: String,
}

#[derive(Debug, Serialize)]
pub struct BenchSummary {
    pub rows: Vec<BenchRow>,
    pub satisfied: usize,
    pub total: usize,
}

impl BenchSummary {
    pub fn success_rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.satisfied as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub provider: ProviderConfig,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub iterations: usize,
    pub attempts: usize,
    pub seed: u64,
    pub sac: SacOverrides,
    pub reward_only: bool,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

pub fn load_tasks(path: &Path) -> Result<Vec<BenchTask>, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let tasks: Vec<BenchTask> = serde_json::from_str(&text).map_err(|e| BenchError::Invalid {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if tasks.is_empty() {
        return Err(BenchError::Invalid {
            path: path.display().to_string(),
            message: "task list is empty".into(),
        });
    }
    Ok(tasks)
}

/// Run every task, up to `jobs` in parallel, each in an isolated run
/// directory. Per-task failures are recorded as rows, never aborting the
/// batch.
pub fn run_bench(tasks: &[BenchTask], options: &BenchOptions) -> BenchSummary {
    let rows: Mutex<Vec<(usize, BenchRow)>> = Mutex::new(Vec::new());
    let jobs = options.jobs.max(1);
    for chunk in tasks
        .iter()
        .enumerate()
        .collect::<Vec<_>>()
        .chunks(jobs)
    {
        std::thread::scope(|scope| {
            for (index, task) in chunk.iter() {
                let rows = &rows;
                scope.spawn(move || {
                    let row = run_one(*index, task, options);
                    rows.lock().expect("rows lock").push((*index, row));
                });
            }
        });
    }
    let mut rows = rows.into_inner().expect("rows lock");
    rows.sort_by_key(|(i, _)| *i);
    let rows: Vec<BenchRow> = rows.into_iter().map(|(_, r)| r).collect();
    let satisfied = rows.iter().filter(|r| r.status == "satisfied").count();
    BenchSummary {
        satisfied,
        total: rows.len(),
        rows,
    }
}

fn run_one(index: usize, task: &BenchTask, options: &BenchOptions) -> BenchRow {
    let run_dir = options.out_dir.join(format!("task_{index:02}"));
    let spec = TaskSpec {
        task: task.task.clone(),
        environment: task.environment.clone(),
        outer_iterations: options.iterations,
        inner_attempts: options.attempts,
        sac: options.sac.clone(),
        seed: task.seed.unwrap_or(options.seed),
    };
    let mut row = BenchRow {
        task: task.task.clone(),
        environment: task.environment.clone(),
        status: "failed".into(),
        iterations_used: 0,
        first_iteration_satisfied: None,
        headline_metric: None,
        headline_mean: None,
        run_dir: run_dir.display().to_string(),
    };
    let outcome = Runner::create(&run_dir, spec, options.provider.clone())
        .and_then(|mut runner| runner.run().cloned());
    match outcome {
        Ok(state) => {
            row.status = match state.status {
                RunStatus::Satisfied => "satisfied".into(),
                RunStatus::Exhausted => "exhausted".into(),
                RunStatus::Failed => format!(
                    "failed ({})",
                    state
                        .failure
                        .as_ref()
                        .map(|f| f.stage.as_str())
                        .unwrap_or("unknown")
                ),
                RunStatus::Running => "interrupted".into(),
            };
            row.iterations_used = state.iterations.len();
            row.first_iteration_satisfied = state
                .iterations
                .first()
                .and_then(|r| r.verdict.as_ref())
                .map(|v| v.satisfied);
            if let Some(rel) = state
                .iterations
                .iter()
                .rev()
                .find_map(|r| r.performance.clone())
            {
                if let Ok(text) = std::fs::read_to_string(run_dir.join(rel)) {
                    if let Ok(report) =
                        serde_json::from_str::<crate::dsl::PerformanceReport>(&text)
                    {
                        if let Some(m) = report.metrics.first() {
                            row.headline_metric = Some(m.name.clone());
                            row.headline_mean = Some(m.mean);
                        }
                    }
                }
            }
        }
        Err(e) => {
            row.status = format!("failed ({e})");
        }
    }
    row
}

pub fn render_text(summary: &BenchSummary, reward_only: bool) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<44} {:<10} {:<22} {:<6} {:<24}\n",
        "task", "env", "status", "iters", "headline"
    ));
    for row in &summary.rows {
        let headline = match (&row.headline_metric, row.headline_mean) {
            (Some(name), Some(mean)) => format!("{name}={mean:.4}"),
            _ => "-".into(),
        };
        out.push_str(&format!(
            "{:<44} {:<10} {:<22} {:<6} {:<24}\n",
            truncate(&row.task, 42),
            row.environment,
            row.status,
            row.iterations_used,
            headline
        ));
        if reward_only {
            let first = match row.first_iteration_satisfied {
                Some(true) => "satisfied",
                Some(false) => "unsatisfied",
                None => "-",
            };
            out.push_str(&format!("    first-iteration (no refinement): {first}\n"));
        }
    }
    out.push_str(&format!(
        "success rate: {}/{} ({:.0}%)\n",
        summary.satisfied,
        summary.total,
        summary.success_rate() * 100.0
    ));
    out
}

pub fn to_csv(summary: &BenchSummary) -> String {
    let mut out = String::from(
        "task,environment,status,iterations_used,first_iteration_satisfied,headline_metric,headline_mean\n",
    );
    for r in &summary.rows {
        out.push_str(&format!(
            "{:?},{},{:?},{},{},{},{}\n",
            r.task,
            r.environment,
            r.status,
            r.iterations_used,
            r.first_iteration_satisfied
                .map(|b| b.to_string())
                .unwrap_or_default(),
            r.headline_metric.clone().unwrap_or_default(),
            r.headline_mean.map(|m| m.to_string()).unwrap_or_default(),
        ));
    }
    out
}

fn truncate(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        let cut: String = s.chars().take(n - 1).collect();
        format!("{cut}…")
    }
}
