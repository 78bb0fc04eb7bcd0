//! Continuous-force cart-pole balancing an inverted pendulum.
//!
//! Classic parameters (cart 1.0 kg, pole 0.1 kg, half-length 0.5 m,
//! g = 9.8 m/s²) with force 10 * a0 newtons, a0 in [-1, 1]. Theta is
//! measured from upright. Terminates when |theta| > 0.7 rad or |x| > 2.4 m.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{EnvError, EnvSchema, EpisodeClock, FieldSpec, Observation, StepOutcome};

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
const HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * HALF_LENGTH;
const FORCE_SCALE: f64 = 10.0;
const DT: f64 = 0.02;
const MAX_STEPS: usize = 500;
const THETA_LIMIT: f64 = 0.7;
const X_LIMIT: f64 = 2.4;

pub fn schema() -> EnvSchema {
    EnvSchema {
        name: "cartpole".into(),
        fields: vec![
            FieldSpec {
                name: "x".into(),
                unit: "m".into(),
                description: "cart position on the track".into(),
                soft_min: -2.4,
                soft_max: 2.4,
            },
            FieldSpec {
                name: "vx".into(),
                unit: "m/s".into(),
                description: "cart velocity".into(),
                soft_min: -5.0,
                soft_max: 5.0,
            },
            FieldSpec {
                name: "theta".into(),
                unit: "rad".into(),
                description: "pole angle from upright, positive clockwise".into(),
                soft_min: -0.7,
                soft_max: 0.7,
            },
            FieldSpec {
                name: "omega".into(),
                unit: "rad/s".into(),
                description: "pole angular velocity".into(),
                soft_min: -5.0,
                soft_max: 5.0,
            },
        ],
        action_dim: 1,
        action_low: vec![-1.0],
        action_high: vec![1.0],
        dt: DT,
        max_steps: MAX_STEPS,
        dynamics: "Cart (1.0 kg) on a track balancing a pole (0.1 kg, half-length 0.5 m) \
                   against gravity 9.8 m/s². The single action a0 in [-1, 1] applies a \
                   horizontal force of 10*a0 newtons to the cart. Upright is theta = 0 and \
                   the uncontrolled pole falls. The episode terminates when |theta| \
                   exceeds 0.7 rad or |x| exceeds 2.4 m, and truncates after 500 steps \
                   (10 seconds)."
            .into(),
        reset: "theta uniform in [-0.05, 0.05]; x, vx and omega start at 0".into(),
    }
}

pub struct CartPole {
    schema: EnvSchema,
    x: f64,
    vx: f64,
    theta: f64,
    omega: f64,
    clock: EpisodeClock,
}

impl CartPole {
    pub fn new() -> Self {
        CartPole {
            schema: schema(),
            x: 0.0,
            vx: 0.0,
            theta: 0.0,
            omega: 0.0,
            clock: EpisodeClock::new(MAX_STEPS),
        }
    }

    fn observation(&self) -> Observation {
        Observation(vec![self.x, self.vx, self.theta, self.omega])
    }
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl super::Env for CartPole {
    fn schema(&self) -> &EnvSchema {
        &self.schema
    }

    fn reset(&mut self, seed: u64) -> Observation {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        self.x = 0.0;
        self.vx = 0.0;
        self.theta = rng.random_range(-0.05..=0.05);
        self.omega = 0.0;
        self.clock.reset();
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        self.clock.check_can_step()?;
        if action.len() != 1 {
            return Err(EnvError::ActionShape { want: 1, got: action.len() });
        }
        let force = FORCE_SCALE * self.schema.clamp_action(action)[0];

        let cos_t = self.theta.cos();
        let sin_t = self.theta.sin();
        let temp = (force + POLE_MASS_LENGTH * self.omega * self.omega * sin_t) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin_t - cos_t * temp)
            / (HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos_t * cos_t / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS;

        self.vx += DT * x_acc;
        self.x += DT * self.vx;
        self.omega += DT * theta_acc;
        self.theta += DT * self.omega;

        let fell = self.theta.abs() > THETA_LIMIT || self.x.abs() > X_LIMIT;
        let (terminated, truncated) = self.clock.tick(fell)?;
        Ok(StepOutcome {
            obs: self.observation(),
            terminated,
            truncated,
        })
    }
}
