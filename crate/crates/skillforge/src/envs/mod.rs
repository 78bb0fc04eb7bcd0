//! Native deterministic continuous-control environments.
//!
//! Three desk-scale systems with machine-readable schemas: a point mass on a
//! friction line, a continuous-force cart-pole, and a one-dimensional hopper.
//! All dynamics integrate with semi-implicit Euler (velocity first, then
//! position with the new velocity) in f64, and every run is a pure function
//! of its seed and action sequence.

mod cartpole;
mod hopper1d;
mod pointmass;
mod rollout;
mod trajectory;

pub use rollout::{rollout, ConstantPolicy, FnPolicy, Policy, RandomPolicy, RolloutError};
pub use trajectory::{save_trajectories, Trajectory, TrajectoryHeader, TrajectoryStep};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const POINTMASS: &str = "pointmass";
pub const CARTPOLE: &str = "cartpole";
pub const HOPPER1D: &str = "hopper1d";

/// Names of the bundled environments, in stable order.
pub const ENV_NAMES: [&str; 3] = [POINTMASS, CARTPOLE, HOPPER1D];

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("unknown environment `{0}` (known: pointmass, cartpole, hopper1d)")]
    UnknownEnvironment(String),
    #[error("action has {got} components, schema expects {want}")]
    ActionShape { want: usize, got: usize },
    #[error("step called on a finished episode (reset the environment first)")]
    EpisodeFinished,
    #[error("step called before reset")]
    NotReset,
}

/// One observation field: name, unit, prose description and soft bounds.
/// Soft bounds describe typical ranges for prompt rendering; they are not
/// enforced by the simulator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub unit: String,
    pub description: String,
    pub soft_min: f64,
    pub soft_max: f64,
}

/// Machine-readable environment description: the contract both the DSL
/// validator and the prompt builders work from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvSchema {
    pub name: String,
    pub fields: Vec<FieldSpec>,
    pub action_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    /// Integration timestep in seconds.
    pub dt: f64,
    pub max_steps: usize,
    pub dynamics: String,
    pub reset: String,
}

impl EnvSchema {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    /// All identifiers a program may reference against this schema, in the
    /// order used by diagnostics: bare fields, `prev_` fields, actions, `t`,
    /// `dt`.
    pub fn identifier_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.fields.iter().map(|f| f.name.clone()).collect();
        names.extend(self.fields.iter().map(|f| format!("prev_{}", f.name)));
        names.extend((0..self.action_dim).map(|i| format!("a{i}")));
        names.push("t".into());
        names.push("dt".into());
        names
    }

    pub fn clamp_action(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .enumerate()
            .map(|(i, &a)| a.clamp(self.action_low[i], self.action_high[i]))
            .collect()
    }
}

/// Observation values aligned with the schema's field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Result of one simulator step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub obs: Observation,
    pub terminated: bool,
    pub truncated: bool,
}

/// Episodic simulator contract. Instances are single-owner; run as many
/// independent instances concurrently as you like.
pub trait Env {
    fn schema(&self) -> &EnvSchema;

    /// Start a new episode. Identical seeds produce identical observations.
    fn reset(&mut self, seed: u64) -> Observation;

    /// Advance one timestep. Actions are clamped to the schema bounds before
    /// integration. `truncated` is set exactly when the step cap is reached
    /// without termination.
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError>;
}

/// Schema for a bundled environment, stable across calls.
pub fn schema(env_name: &str) -> Result<EnvSchema, EnvError> {
    match env_name {
        POINTMASS => Ok(pointmass::schema()),
        CARTPOLE => Ok(cartpole::schema()),
        HOPPER1D => Ok(hopper1d::schema()),
        other => Err(EnvError::UnknownEnvironment(other.to_string())),
    }
}

/// Construct a bundled environment by name.
pub fn make_env(env_name: &str) -> Result<Box<dyn Env>, EnvError> {
    match env_name {
        POINTMASS => Ok(Box::new(pointmass::PointMass::new())),
        CARTPOLE => Ok(Box::new(cartpole::CartPole::new())),
        HOPPER1D => Ok(Box::new(hopper1d::Hopper1d::new())),
        other => Err(EnvError::UnknownEnvironment(other.to_string())),
    }
}

/// Shared bookkeeping for step counting, termination and the
/// finished-episode contract.
pub(crate) struct EpisodeClock {
    steps: usize,
    max_steps: usize,
    finished: bool,
    started: bool,
}

impl EpisodeClock {
    pub(crate) fn new(max_steps: usize) -> Self {
        EpisodeClock {
            steps: 0,
            max_steps,
            finished: false,
            started: false,
        }
    }

    pub(crate) fn reset(&mut self) {
        self.steps = 0;
        self.finished = false;
        self.started = true;
    }

    /// Call after integrating one step; returns (terminated, truncated).
    pub(crate) fn tick(&mut self, terminated: bool) -> Result<(bool, bool), EnvError> {
        if !self.started {
            return Err(EnvError::NotReset);
        }
        if self.finished {
            return Err(EnvError::EpisodeFinished);
        }
        self.steps += 1;
        let truncated = !terminated && self.steps >= self.max_steps;
        self.finished = terminated || truncated;
        Ok((terminated, truncated))
    }

    pub(crate) fn check_can_step(&self) -> Result<(), EnvError> {
        if !self.started {
            return Err(EnvError::NotReset);
        }
        if self.finished {
            return Err(EnvError::EpisodeFinished);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_lookup() {
        let s = schema("pointmass").unwrap();
        assert_eq!(s.fields.len(), 2);
        assert_eq!(s.fields[0].name, "x");
        assert_eq!(s.fields[1].name, "vx");
        assert_eq!(s.action_dim, 1);
        assert_eq!(s.dt, 0.05);
        assert_eq!(s.max_steps, 200);

        let s = schema("cartpole").unwrap();
        let names: Vec<_> = s.fields.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["x", "vx", "theta", "omega"]);
        assert_eq!(s.dt, 0.02);
        assert_eq!(s.max_steps, 500);

        assert!(matches!(
            schema("walker2d"),
            Err(EnvError::UnknownEnvironment(_))
        ));
    }

    #[test]
    fn identifier_names_order() {
        let s = schema("pointmass").unwrap();
        assert_eq!(
            s.identifier_names(),
            ["x", "vx", "prev_x", "prev_vx", "a0", "t", "dt"]
        );
    }

    #[test]
    fn reset_is_deterministic() {
        for name in ENV_NAMES {
            let mut env = make_env(name).unwrap();
            let a = env.reset(0);
            let b = env.reset(0);
            assert_eq!(a, b, "{name} reset not deterministic");
        }
    }

    #[test]
    fn pointmass_reset_distribution() {
        let mut env = make_env("pointmass").unwrap();
        for seed in 0..50 {
            let obs = env.reset(seed);
            assert!(obs.0[0].abs() <= 0.1, "x out of reset range: {}", obs.0[0]);
            assert_eq!(obs.0[1], 0.0);
        }
    }

    #[test]
    fn cartpole_reset_distribution() {
        let mut env = make_env("cartpole").unwrap();
        for seed in 0..50 {
            let obs = env.reset(seed);
            assert_eq!(obs.0[0], 0.0);
            assert_eq!(obs.0[1], 0.0);
            assert!(obs.0[2].abs() <= 0.05);
            assert_eq!(obs.0[3], 0.0);
        }
    }

    #[test]
    fn stepping_finished_episode_is_an_error() {
        let mut env = make_env("pointmass").unwrap();
        env.reset(3);
        for _ in 0..200 {
            env.step(&[0.0]).unwrap();
        }
        assert!(matches!(env.step(&[0.0]), Err(EnvError::EpisodeFinished)));
    }

    #[test]
    fn step_before_reset_is_an_error() {
        let mut env = make_env("cartpole").unwrap();
        assert!(matches!(env.step(&[0.0]), Err(EnvError::NotReset)));
    }
}
