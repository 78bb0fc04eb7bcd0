//! Text-to-skill: natural-language tasks in, trained control policies out.
//!
//! An LLM writes a reward program in a small closed DSL, a from-scratch
//! Soft Actor-Critic trainer learns a policy against a native physics
//! environment, the LLM then writes an evaluation program, judges the
//! measured behavior, and the loop repeats on its improvement suggestions
//! until the verdict is satisfied — no human in the loop.
//!
//! The crate is organized around that loop:
//!
//! - [`dsl`] — parse, validate, print and evaluate reward/metric programs
//! - [`envs`] — deterministic desk-scale environments with schemas
//! - [`nn`] — dense MLP forward/backward, Adam, gradient checking
//! - [`sac`] — the Soft Actor-Critic trainer and policy checkpoints
//! - [`llm`] — chat-completion client (live/record/replay/stub) and the
//!   four prompt builders
//! - [`orchestrator`] — the outer loop with persistence and resume
//! - [`cli`] — the `skillforge` command-line front end
//!
//! Start with the runnable examples (`cargo run --example dsl_tour`, then
//! `full_loop_stub`) for a guided walk through each capability.

pub mod cli;
pub mod dsl;
pub mod envs;
pub mod llm;
pub mod nn;
pub mod orchestrator;
pub mod sac;
pub mod util;
