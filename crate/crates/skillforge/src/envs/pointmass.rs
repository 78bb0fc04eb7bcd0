//! Unit point mass on a line with linear friction.
//!
//! vx' = vx + dt * (F - c * vx) / m,  x' = x + dt * vx'
//! with m = 1 kg, c = 0.5 N s/m and F = a0 in [-1, 1] N. Terminal velocity
//! is 2 m/s; a constant full push covers about 16 m in one episode.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{EnvError, EnvSchema, EpisodeClock, FieldSpec, Observation, StepOutcome};

const MASS: f64 = 1.0;
const FRICTION: f64 = 0.5;
const DT: f64 = 0.05;
const MAX_STEPS: usize = 200;

pub fn schema() -> EnvSchema {
    EnvSchema {
        name: "pointmass".into(),
        fields: vec![
            FieldSpec {
                name: "x".into(),
                unit: "m".into(),
                description: "position along the line, positive to the right".into(),
                soft_min: -20.0,
                soft_max: 20.0,
            },
            FieldSpec {
                name: "vx".into(),
                unit: "m/s".into(),
                description: "velocity along the line".into(),
                soft_min: -2.0,
                soft_max: 2.0,
            },
        ],
        action_dim: 1,
        action_low: vec![-1.0],
        action_high: vec![1.0],
        dt: DT,
        max_steps: MAX_STEPS,
        dynamics: "Unit mass (1 kg) sliding on a line with linear friction 0.5 N·s/m. \
                   The single action a0 in [-1, 1] is a force in newtons. Terminal \
                   velocity under full push is 2 m/s. Episodes never terminate early; \
                   they truncate after 200 steps (10 seconds)."
            .into(),
        reset: "x uniform in [-0.1, 0.1], vx = 0".into(),
    }
}

pub struct PointMass {
    schema: EnvSchema,
    x: f64,
    vx: f64,
    clock: EpisodeClock,
}

impl PointMass {
    pub fn new() -> Self {
        PointMass {
            schema: schema(),
            x: 0.0,
            vx: 0.0,
            clock: EpisodeClock::new(MAX_STEPS),
        }
    }

    fn observation(&self) -> Observation {
        Observation(vec![self.x, self.vx])
    }
}

impl Default for PointMass {
    fn default() -> Self {
        Self::new()
    }
}

impl super::Env for PointMass {
    fn schema(&self) -> &EnvSchema {
        &self.schema
    }

    fn reset(&mut self, seed: u64) -> Observation {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        self.x = rng.random_range(-0.1..=0.1);
        self.vx = 0.0;
        self.clock.reset();
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        self.clock.check_can_step()?;
        if action.len() != 1 {
            return Err(EnvError::ActionShape { want: 1, got: action.len() });
        }
        let force = self.schema.clamp_action(action)[0];
        self.vx += DT * (force - FRICTION * self.vx) / MASS;
        self.x += DT * self.vx;
        let (terminated, truncated) = self.clock.tick(false)?;
        Ok(StepOutcome {
            obs: self.observation(),
            terminated,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::Env;

    #[test]
    fn one_hand_computed_step() {
        let mut env = PointMass::new();
        env.reset(0);
        env.x = 0.0;
        env.vx = 0.0;
        let out = env.step(&[1.0]).unwrap();
        assert!((out.obs.0[1] - 0.05).abs() < 1e-15);
        assert!((out.obs.0[0] - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_at_rest() {
        let mut env = PointMass::new();
        env.reset(0);
        env.x = 0.0;
        env.vx = 0.0;
        let out = env.step(&[0.0]).unwrap();
        assert_eq!(out.obs.0, vec![0.0, 0.0]);
    }

    #[test]
    fn friction_decays_speed() {
        let mut env = PointMass::new();
        env.reset(0);
        env.vx = 1.5;
        let mut prev = 1.5_f64;
        for _ in 0..20 {
            let out = env.step(&[0.0]).unwrap();
            let v = out.obs.0[1];
            assert!(v.abs() < prev.abs(), "|vx| must strictly decrease");
            prev = v;
        }
    }

    #[test]
    fn actions_clamp_to_bounds() {
        let mut a = PointMass::new();
        let mut b = PointMass::new();
        a.reset(7);
        b.reset(7);
        let oa = a.step(&[5.0]).unwrap();
        let ob = b.step(&[1.0]).unwrap();
        assert_eq!(oa.obs, ob.obs);
    }

    #[test]
    fn truncates_at_cap() {
        let mut env = PointMass::new();
        env.reset(1);
        for i in 0..MAX_STEPS {
            let out = env.step(&[0.3]).unwrap();
            assert!(!out.terminated);
            assert_eq!(out.truncated, i == MAX_STEPS - 1);
        }
    }
}
