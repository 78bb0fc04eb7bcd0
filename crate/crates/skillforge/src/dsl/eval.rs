//! Expression evaluation over transitions and metric aggregation over
//! trajectories. Pure and deterministic: identical inputs give bit-identical
//! results.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::{EnvSchema, Trajectory};

use super::ast::{
    Aggregator, BinOp, BoolOp, CmpOp, EvalProgram, Expr, ExprKind, Func, RewardProgram,
};
use super::error::{DslError, DslErrorKind};

/// One transition as seen by a reward or metric expression: bare names read
/// the next observation, `prev_` names the previous one, `a0..` the action,
/// plus the 0-based step index `t` and the timestep `dt`.
pub struct TransitionCtx<'a> {
    pub schema: &'a EnvSchema,
    pub prev: &'a [f64],
    pub next: &'a [f64],
    pub action: &'a [f64],
    pub t: usize,
}

impl<'a> TransitionCtx<'a> {
    fn lookup(&self, name: &str) -> Option<f64> {
        match name {
            "t" => return Some(self.t as f64),
            "dt" => return Some(self.schema.dt),
            _ => {}
        }
        if let Some(idx) = self.schema.field_index(name) {
            return self.next.get(idx).copied();
        }
        if let Some(rest) = name.strip_prefix("prev_") {
            if let Some(idx) = self.schema.field_index(rest) {
                return self.prev.get(idx).copied();
            }
        }
        if let Some(rest) = name.strip_prefix('a') {
            if let Ok(i) = rest.parse::<usize>() {
                if rest == i.to_string() {
                    return self.action.get(i).copied();
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Value {
    Num(f64),
    Bool(bool),
}

/// Evaluate a reward program on one transition. The program should already
/// be validated for the schema; name and type violations surface as errors
/// all the same rather than panicking.
pub fn eval_reward(program: &RewardProgram, ctx: &TransitionCtx) -> Result<f64, DslError> {
    let mut bindings: Vec<(&str, f64)> = Vec::with_capacity(program.bindings.len());
    for b in &program.bindings {
        let v = eval_num(&b.expr, ctx, &bindings)?;
        bindings.push((b.name.as_str(), v));
    }
    eval_num(&program.reward, ctx, &bindings)
}

/// Evaluate one metric's per-step expression on a transition.
pub fn eval_metric_step(expr: &Expr, ctx: &TransitionCtx) -> Result<f64, DslError> {
    eval_num(expr, ctx, &[])
}

fn eval_num(expr: &Expr, ctx: &TransitionCtx, bindings: &[(&str, f64)]) -> Result<f64, DslError> {
    match eval_value(expr, ctx, bindings)? {
        Value::Num(v) => Ok(v),
        Value::Bool(_) => Err(DslError::new(
            DslErrorKind::TypeError,
            expr.span,
            "expected a numeric value, found boolean",
        )),
    }
}

fn eval_bool(expr: &Expr, ctx: &TransitionCtx, bindings: &[(&str, f64)]) -> Result<bool, DslError> {
    match eval_value(expr, ctx, bindings)? {
        Value::Bool(b) => Ok(b),
        Value::Num(_) => Err(DslError::new(
            DslErrorKind::TypeError,
            expr.span,
            "expected a boolean value, found numeric",
        )),
    }
}

fn finite(v: f64, expr: &Expr, what: &str) -> Result<f64, DslError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DslError::new(
            DslErrorKind::NonFiniteValue,
            expr.span,
            format!("{what} produced a non-finite value"),
        ))
    }
}

fn eval_value(
    expr: &Expr,
    ctx: &TransitionCtx,
    bindings: &[(&str, f64)],
) -> Result<Value, DslError> {
    match &expr.kind {
        ExprKind::Number(v) => Ok(Value::Num(*v)),
        ExprKind::Ident(name) => {
            if let Some((_, v)) = bindings.iter().find(|(n, _)| n == name) {
                return Ok(Value::Num(*v));
            }
            match ctx.lookup(name) {
                Some(v) => Ok(Value::Num(v)),
                None => Err(DslError::new(
                    DslErrorKind::UnknownIdentifier,
                    expr.span,
                    format!("unknown identifier `{name}` at evaluation time"),
                )),
            }
        }
        ExprKind::Neg(inner) => {
            let v = eval_num(inner, ctx, bindings)?;
            Ok(Value::Num(-v))
        }
        ExprKind::Not(inner) => {
            let b = eval_bool(inner, ctx, bindings)?;
            Ok(Value::Bool(!b))
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let a = eval_num(lhs, ctx, bindings)?;
            let b = eval_num(rhs, ctx, bindings)?;
            let raw = match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
            };
            let what = match op {
                BinOp::Div => "division".to_string(),
                _ => format!("`{}`", op.symbol()),
            };
            Ok(Value::Num(finite(raw, expr, &what)?))
        }
        ExprKind::Compare { op, lhs, rhs } => {
            let a = eval_num(lhs, ctx, bindings)?;
            let b = eval_num(rhs, ctx, bindings)?;
            let r = match op {
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
                CmpOp::Eq => a == b,
            };
            Ok(Value::Bool(r))
        }
        ExprKind::Bool { op, lhs, rhs } => {
            let a = eval_bool(lhs, ctx, bindings)?;
            // No short-circuiting: both sides are pure, and evaluating both
            // keeps error reporting independent of operand values.
            let b = eval_bool(rhs, ctx, bindings)?;
            let r = match op {
                BoolOp::And => a && b,
                BoolOp::Or => a || b,
            };
            Ok(Value::Bool(r))
        }
        ExprKind::Call { func, args } => {
            if *func == Func::If {
                let cond = eval_bool(&args[0], ctx, bindings)?;
                let v = if cond {
                    eval_num(&args[1], ctx, bindings)?
                } else {
                    eval_num(&args[2], ctx, bindings)?
                };
                return Ok(Value::Num(v));
            }
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_num(a, ctx, bindings)?);
            }
            let raw = match func {
                Func::Abs => vals[0].abs(),
                Func::Min => vals[0].min(vals[1]),
                Func::Max => vals[0].max(vals[1]),
                Func::Exp => vals[0].exp(),
                Func::Log => {
                    if vals[0] <= 0.0 {
                        return Err(DslError::new(
                            DslErrorKind::DomainError,
                            expr.span,
                            format!("log of non-positive value {}", vals[0]),
                        ));
                    }
                    vals[0].ln()
                }
                Func::Sqrt => {
                    if vals[0] < 0.0 {
                        return Err(DslError::new(
                            DslErrorKind::DomainError,
                            expr.span,
                            format!("sqrt of negative value {}", vals[0]),
                        ));
                    }
                    vals[0].sqrt()
                }
                Func::Tanh => vals[0].tanh(),
                Func::Sin => vals[0].sin(),
                Func::Cos => vals[0].cos(),
                Func::Clip => {
                    let (x, lo, hi) = (vals[0], vals[1], vals[2]);
                    if lo > hi {
                        return Err(DslError::new(
                            DslErrorKind::ClipBoundsError,
                            expr.span,
                            format!("clip bounds are inverted: lo {lo} > hi {hi}"),
                        ));
                    }
                    x.clamp(lo, hi)
                }
                Func::If => unreachable!(),
            };
            Ok(Value::Num(finite(raw, expr, &format!("`{}`", func.name()))?))
        }
    }
}

/// Per-metric evaluation outcome over a set of episodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub name: String,
    pub per_episode: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Metric values for every metric of an evaluation program, aggregated per
/// episode and summarized across episodes (population standard deviation).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub environment: String,
    pub checkpoint: String,
    pub episodes: usize,
    pub metrics: Vec<MetricReport>,
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no trajectories supplied: metrics need at least one episode")]
    EmptyTrajectories,
    #[error("episode {episode}, step {step}: {source}")]
    Step {
        episode: usize,
        step: usize,
        source: DslError,
    },
    #[error("metric `{name}`: {source}")]
    Aggregate { name: String, source: DslError },
}

/// Evaluate every metric of `program` over `trajectories`.
///
/// The per-step expression runs at each step of each episode, the
/// aggregator reduces each episode to one value, and mean/std across
/// episodes summarize the run.
pub fn eval_metrics(
    program: &EvalProgram,
    schema: &EnvSchema,
    trajectories: &[Trajectory],
    checkpoint: &str,
) -> Result<PerformanceReport, MetricsError> {
    if trajectories.is_empty() {
        return Err(MetricsError::EmptyTrajectories);
    }
    let mut metrics = Vec::with_capacity(program.metrics.len());
    for m in &program.metrics {
        let mut per_episode = Vec::with_capacity(trajectories.len());
        for (e, traj) in trajectories.iter().enumerate() {
            let mut series = Vec::with_capacity(traj.steps.len());
            for (t, step) in traj.steps.iter().enumerate() {
                let ctx = TransitionCtx {
                    schema,
                    prev: step.prev.values(),
                    next: step.next.values(),
                    action: &step.action,
                    t,
                };
                let v = eval_metric_step(&m.expr, &ctx).map_err(|source| MetricsError::Step {
                    episode: e,
                    step: t,
                    source,
                })?;
                series.push(v);
            }
            let agg = aggregate(m.aggregator, &series);
            if !agg.is_finite() {
                return Err(MetricsError::Aggregate {
                    name: m.name.clone(),
                    source: DslError::new(
                        DslErrorKind::NonFiniteValue,
                        m.name_span,
                        format!("aggregator `{}` produced a non-finite value", m.aggregator.name()),
                    ),
                });
            }
            per_episode.push(agg);
        }
        let (mean, std) = mean_std(&per_episode);
        if !mean.is_finite() || !std.is_finite() {
            return Err(MetricsError::Aggregate {
                name: m.name.clone(),
                source: DslError::new(
                    DslErrorKind::NonFiniteValue,
                    m.name_span,
                    "cross-episode summary produced a non-finite value",
                ),
            });
        }
        metrics.push(MetricReport {
            name: m.name.clone(),
            per_episode,
            mean,
            std,
        });
    }
    Ok(PerformanceReport {
        environment: schema.name.clone(),
        checkpoint: checkpoint.to_string(),
        episodes: trajectories.len(),
        metrics,
    })
}

fn aggregate(agg: Aggregator, series: &[f64]) -> f64 {
    debug_assert!(!series.is_empty(), "trajectories have at least one step");
    match agg {
        Aggregator::Mean => series.iter().sum::<f64>() / series.len() as f64,
        Aggregator::Sum => series.iter().sum(),
        Aggregator::Min => series.iter().copied().fold(f64::INFINITY, f64::min),
        Aggregator::Max => series.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Aggregator::Final => *series.last().unwrap(),
        Aggregator::Std => mean_std(series).1,
    }
}

/// Mean and population standard deviation; std of a single value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
