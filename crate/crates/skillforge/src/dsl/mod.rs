//! The reward and evaluation-metric languages.
//!
//! Generated programs arrive as text, parse into immutable ASTs, validate
//! against an environment schema, and evaluate purely. Every failure mode is
//! a [`DslError`] with a category, a single-line message and a source span,
//! making it directly usable as repair feedback.

pub mod ast;
mod error;
pub mod eval;
pub mod generator;
mod lexer;
mod parser;
mod print;
mod validate;

pub use ast::{Aggregator, Binding, EvalProgram, Expr, ExprKind, MetricDef, RewardProgram, Span};
pub use error::{DslError, DslErrorKind};
pub use eval::{
    eval_metric_step, eval_metrics, eval_reward, mean_std, MetricReport, MetricsError,
    PerformanceReport, TransitionCtx,
};
pub use parser::{parse_eval, parse_reward};
pub use print::{print_eval, print_expr, print_reward};
pub use validate::{validate_eval, validate_reward};
