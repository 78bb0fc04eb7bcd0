//! Run-directory inspection: a per-iteration table plus one training-curve
//! SVG per iteration.

use std::path::Path;

use serde::Serialize;

use crate::dsl::PerformanceReport;
use crate::orchestrator::{RunState, RunStatus};
use crate::sac::TrainingLog;

use super::plot;

#[derive(Debug, Serialize)]
pub struct IterationSummary {
    pub index: usize,
    pub reward_attempts: usize,
    pub eval_attempts: usize,
    pub review_attempts: usize,
    pub verdict: Option<bool>,
    pub headline_metric: Option<String>,
    pub headline_mean: Option<f64>,
    pub final_eval_return: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct InspectReport {
    pub run_id: String,
    pub task: String,
    pub environment: String,
    pub status: RunStatus,
    pub iterations: Vec<IterationSummary>,
    pub best_checkpoint: Option<String>,
    pub curves: Vec<String>,
}

/// Summarize a run and write `training_curve_iter_XXX.svg` files into the
/// run directory.
pub fn inspect(run_dir: &Path, state: &RunState) -> std::io::Result<InspectReport> {
    let mut iterations = Vec::new();
    let mut curves = Vec::new();
    for record in &state.iterations {
        let (metric_name, metric_mean) = record
            .performance
            .as_ref()
            .and_then(|rel| {
                let text = std::fs::read_to_string(run_dir.join(rel)).ok()?;
                let report: PerformanceReport = serde_json::from_str(&text).ok()?;
                report.metrics.first().map(|m| (m.name.clone(), m.mean))
            })
            .map(|(n, m)| (Some(n), Some(m)))
            .unwrap_or((None, None));
        iterations.push(IterationSummary {
            index: record.index,
            reward_attempts: record.reward_attempts.len(),
            eval_attempts: record.eval_attempts.len(),
            review_attempts: record.review_attempts.len(),
            verdict: record.verdict.as_ref().map(|v| v.satisfied),
            headline_metric: metric_name,
            headline_mean: metric_mean,
            final_eval_return: record.final_eval_return,
        });
        if let Some(rel) = &record.training_log {
            if let Ok(text) = std::fs::read_to_string(run_dir.join(rel)) {
                if let Some(log) = TrainingLog::from_csv(&text) {
                    let points: Vec<(f64, f64)> = log
                        .rows
                        .iter()
                        .map(|r| (r.env_step as f64, r.eval_return_mean))
                        .collect();
                    let svg = plot::line_chart(
                        &points,
                        &format!("iteration {} training curve", record.index),
                        "env step",
                        "mean eval return",
                    );
                    let name = format!("training_curve_iter_{:03}.svg", record.index);
                    crate::util::write_atomic(&run_dir.join(&name), svg.as_bytes())?;
                    curves.push(name);
                }
            }
        }
    }
    Ok(InspectReport {
        run_id: state.run_id.clone(),
        task: state.task.task.clone(),
        environment: state.task.environment.clone(),
        status: state.status,
        iterations,
        best_checkpoint: state.best_checkpoint.clone(),
        curves,
    })
}

pub fn render_text(report: &InspectReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "run {} | task: {} | environment: {} | status: {:?}\n",
        report.run_id, report.task, report.environment, report.status
    ));
    out.push_str(&format!(
        "{:<6} {:<8} {:<6} {:<8} {:<10} {:<24} {:>12}\n",
        "iter", "reward#", "eval#", "review#", "verdict", "headline metric", "mean"
    ));
    for it in &report.iterations {
        let verdict = match it.verdict {
            Some(true) => "satisfied",
            Some(false) => "retry",
            None => "-",
        };
        out.push_str(&format!(
            "{:<6} {:<8} {:<6} {:<8} {:<10} {:<24} {:>12}\n",
            it.index,
            it.reward_attempts,
            it.eval_attempts,
            it.review_attempts,
            verdict,
            it.headline_metric.as_deref().unwrap_or("-"),
            it.headline_mean
                .map(|m| format!("{m:.4}"))
                .unwrap_or_else(|| "-".into()),
        ));
    }
    if let Some(best) = &report.best_checkpoint {
        out.push_str(&format!("best checkpoint: {best}\n"));
    }
    for c in &report.curves {
        out.push_str(&format!("wrote {c}\n"));
    }
    out
}
