//! Seeded rollouts of a policy against an environment, with rewards
//! evaluated by a reward program.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::dsl::{eval_reward, DslError, RewardProgram, TransitionCtx};

use super::{Env, EnvError, Observation, Trajectory, TrajectoryStep};

/// Maps observations to actions. Implementations may hold internal state
/// (for example a seeded noise stream), so `act` takes `&mut self`.
pub trait Policy {
    fn act(&mut self, obs: &Observation) -> Vec<f64>;
}

/// Always plays the same action.
pub struct ConstantPolicy(pub Vec<f64>);

impl Policy for ConstantPolicy {
    fn act(&mut self, _obs: &Observation) -> Vec<f64> {
        self.0.clone()
    }
}

/// Uniform random actions within given bounds, from a seeded stream.
pub struct RandomPolicy {
    low: Vec<f64>,
    high: Vec<f64>,
    rng: ChaCha12Rng,
}

impl RandomPolicy {
    pub fn new(low: Vec<f64>, high: Vec<f64>, seed: u64) -> Self {
        RandomPolicy {
            low,
            high,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _obs: &Observation) -> Vec<f64> {
        self.low
            .iter()
            .zip(&self.high)
            .map(|(&lo, &hi)| self.rng.random_range(lo..=hi))
            .collect()
    }
}

/// Wraps a closure as a policy.
pub struct FnPolicy<F: FnMut(&Observation) -> Vec<f64>>(pub F);

impl<F: FnMut(&Observation) -> Vec<f64>> Policy for FnPolicy<F> {
    fn act(&mut self, obs: &Observation) -> Vec<f64> {
        self.0(obs)
    }
}

#[derive(Debug, Error)]
pub enum RolloutError {
    #[error("episode {episode}, step {step}: {source}")]
    Reward {
        episode: usize,
        step: usize,
        source: DslError,
    },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("episodes must be >= 1")]
    NoEpisodes,
}

/// Run `episodes` seeded episodes; episode `e` resets with `base_seed + e`.
/// Rewards come from `program`; failures carry the episode and step index.
pub fn rollout(
    env: &mut dyn Env,
    policy: &mut dyn Policy,
    program: &RewardProgram,
    episodes: usize,
    base_seed: u64,
) -> Result<Vec<Trajectory>, RolloutError> {
    if episodes == 0 {
        return Err(RolloutError::NoEpisodes);
    }
    let schema = env.schema().clone();
    let mut out = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let seed = base_seed.wrapping_add(e as u64);
        let mut obs = env.reset(seed);
        let mut steps = Vec::new();
        let mut t = 0usize;
        loop {
            let action = policy.act(&obs);
            let outcome = env.step(&action)?;
            let ctx = TransitionCtx {
                schema: &schema,
                prev: obs.values(),
                next: outcome.obs.values(),
                action: &action,
                t,
            };
            let reward = eval_reward(program, &ctx).map_err(|source| RolloutError::Reward {
                episode: e,
                step: t,
                source,
            })?;
            steps.push(TrajectoryStep {
                prev: obs.clone(),
                action,
                next: outcome.obs.clone(),
                reward,
                terminated: outcome.terminated,
                truncated: outcome.truncated,
            });
            if outcome.terminated || outcome.truncated {
                break;
            }
            obs = outcome.obs;
            t += 1;
        }
        out.push(Trajectory { seed, steps });
    }
    Ok(out)
}
