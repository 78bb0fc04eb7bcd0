//! From-scratch Soft Actor-Critic: twin Q critics, a tanh-squashed Gaussian
//! policy and automatic entropy-temperature tuning, trained against rewards
//! evaluated by a validated reward program. A training run is a pure
//! function of its configuration seed.

mod checkpoint;
pub mod policy;
mod replay;
pub mod update;

pub use checkpoint::{CheckpointError, CheckpointPolicy, PolicyCheckpoint, CHECKPOINT_VERSION};
pub use replay::{ReplayBuffer, Transition};
pub use update::{Losses, UpdateBatch, UpdateError};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{self, DslError, RewardProgram, TransitionCtx};
use crate::envs::{self, EnvError, Observation, Policy};
use crate::nn::{mlp_forward, AdamState, Mat, MlpSpec, NnError, ParamStore};
use crate::util;

/// Training hyperparameters. `for_env` supplies the per-environment
/// defaults; only the reward program is meant to change between refinement
/// iterations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SacConfig {
    pub total_steps: usize,
    pub warmup_steps: usize,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub tau: f64,
    pub lr_policy: f64,
    pub lr_critic: f64,
    pub lr_temperature: f64,
    pub target_entropy: f64,
    pub updates_per_step: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl SacConfig {
    /// Defaults for a bundled environment: hidden [64, 64], gamma 0.99,
    /// tau 0.005, batch 128, replay 50k, warmup 1k, all learning rates
    /// 3e-4, one update per step, target entropy -(action dim), evaluation
    /// every 2000 steps over 5 episodes; 30k total steps on pointmass and
    /// 60k on the others.
    pub fn for_env(env_name: &str) -> Result<Self, EnvError> {
        let schema = envs::schema(env_name)?;
        let total_steps = if env_name == envs::POINTMASS { 30_000 } else { 60_000 };
        Ok(SacConfig {
            total_steps,
            warmup_steps: 1_000,
            replay_capacity: 50_000,
            batch_size: 128,
            gamma: 0.99,
            tau: 0.005,
            lr_policy: 3e-4,
            lr_critic: 3e-4,
            lr_temperature: 3e-4,
            target_entropy: -(schema.action_dim as f64),
            updates_per_step: 1,
            eval_interval: 2_000,
            eval_episodes: 5,
            hidden: vec![64, 64],
            seed: 0,
        })
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |msg: String| Err(TrainError::Config(msg));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma must be in (0, 1), got {}", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail(format!("tau must be in (0, 1], got {}", self.tau));
        }
        if self.batch_size == 0 || self.batch_size > self.replay_capacity {
            return fail(format!(
                "batch size {} must be in 1..=replay capacity {}",
                self.batch_size, self.replay_capacity
            ));
        }
        if self.warmup_steps > self.total_steps {
            return fail(format!(
                "total steps {} must be at least warmup steps {}",
                self.total_steps, self.warmup_steps
            ));
        }
        if self.eval_interval == 0 || self.eval_episodes == 0 {
            return fail("eval interval and eval episodes must be >= 1".into());
        }
        Ok(())
    }
}

/// One evaluation-interval record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLogRow {
    pub env_step: usize,
    pub eval_return_mean: f64,
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub policy_loss: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<TrainingLogRow>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("env_step,eval_return_mean,critic1_loss,critic2_loss,policy_loss,alpha\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.env_step,
                r.eval_return_mean,
                r.critic1_loss,
                r.critic2_loss,
                r.policy_loss,
                r.alpha
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Option<TrainingLog> {
        let mut rows = Vec::new();
        for line in text.lines().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 6 {
                return None;
            }
            rows.push(TrainingLogRow {
                env_step: parts[0].parse().ok()?,
                eval_return_mean: parts[1].parse().ok()?,
                critic1_loss: parts[2].parse().ok()?,
                critic2_loss: parts[3].parse().ok()?,
                policy_loss: parts[4].parse().ok()?,
                alpha: parts[5].parse().ok()?,
            });
        }
        Some(TrainingLog { rows })
    }

    pub fn final_eval_return(&self) -> Option<f64> {
        self.rows.last().map(|r| r.eval_return_mean)
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("reward program failed at env step {step}: {source}")]
    Reward { step: usize, source: DslError },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("{source} at env step {step}")]
    Update { step: usize, source: UpdateError },
}

impl TrainError {
    /// The reward-program error, if that is what aborted training. The
    /// refinement loop feeds these back to the generator verbatim.
    pub fn as_dsl(&self) -> Option<&DslError> {
        match self {
            TrainError::Reward { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// Train a policy for `env_name` against `program`.
///
/// Runs the SAC loop: uniform random warmup actions, then squashed-Gaussian
/// sampling, one buffered transition per env step and `updates_per_step`
/// gradient updates once past warmup. Deterministic evaluation episodes run
/// every `eval_interval` steps and feed the training log. Fully
/// deterministic given `config.seed`.
pub fn train(
    env_name: &str,
    program: &RewardProgram,
    config: &SacConfig,
) -> Result<(PolicyCheckpoint, TrainingLog), TrainError> {
    config.validate()?;
    let mut env = envs::make_env(env_name)?;
    let schema = env.schema().clone();
    dsl::validate_reward(program, &schema)
        .map_err(|source| TrainError::Reward { step: 0, source })?;

    let obs_dim = schema.fields.len();
    let k = schema.action_dim;
    let policy_spec = MlpSpec::new(obs_dim, config.hidden.clone(), 2 * k);
    let critic_spec = MlpSpec::new(obs_dim + k, config.hidden.clone(), 1);

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut policy = ParamStore::init(&policy_spec, &mut rng);
    let mut critic1 = ParamStore::init(&critic_spec, &mut rng);
    let mut critic2 = ParamStore::init(&critic_spec, &mut rng);
    let mut target1 = critic1.clone();
    let mut target2 = critic2.clone();
    let mut log_alpha: f64 = 0.2_f64.ln();

    let mut adam_policy = AdamState::new(policy_spec.param_count(), config.lr_policy);
    let mut adam_critic1 = AdamState::new(critic_spec.param_count(), config.lr_critic);
    let mut adam_critic2 = AdamState::new(critic_spec.param_count(), config.lr_critic);
    let mut adam_alpha = AdamState::new(1, config.lr_temperature);

    let mut buffer = ReplayBuffer::new(config.replay_capacity);
    let mut log = TrainingLog::default();
    let mut last_losses = Losses {
        critic1: 0.0,
        critic2: 0.0,
        policy: 0.0,
        temperature: 0.0,
        alpha: log_alpha.exp(),
    };

    let reward_hash = util::sha256_hex(dsl::print_reward(program).as_bytes());
    let mut obs = env.reset(rng.random::<u64>());
    let mut ep_t: usize = 0;

    for step in 1..=config.total_steps {
        let tanh_action: Vec<f64> = if step <= config.warmup_steps {
            (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect()
        } else {
            let input = Mat::from_row(obs.values());
            let (head, _) = mlp_forward(&policy_spec, &policy, &input)?;
            let eps = Mat::from_vec(1, k, (0..k).map(|_| StandardNormal.sample(&mut rng)).collect());
            policy::sample_actions(&head, k, eps).actions.data
        };
        // All bundled environments use [-1, 1] bounds, so tanh space is
        // already the action space; the env clamps defensively anyway.
        let outcome = env.step(&tanh_action)?;
        let ctx = TransitionCtx {
            schema: &schema,
            prev: obs.values(),
            next: outcome.obs.values(),
            action: &tanh_action,
            t: ep_t,
        };
        let reward =
            dsl::eval_reward(program, &ctx).map_err(|source| TrainError::Reward { step, source })?;
        buffer.push(Transition {
            obs: obs.values().to_vec(),
            action: tanh_action,
            reward,
            next_obs: outcome.obs.values().to_vec(),
            terminated: outcome.terminated,
        });
        if outcome.terminated || outcome.truncated {
            obs = env.reset(rng.random::<u64>());
            ep_t = 0;
        } else {
            obs = outcome.obs;
            ep_t += 1;
        }

        if step >= config.warmup_steps && buffer.len() >= config.batch_size {
            for _ in 0..config.updates_per_step {
                let losses = sac_update(
                    &mut rng,
                    &buffer,
                    config,
                    k,
                    &policy_spec,
                    &critic_spec,
                    &mut policy,
                    &mut critic1,
                    &mut critic2,
                    &mut target1,
                    &mut target2,
                    &mut log_alpha,
                    &mut adam_policy,
                    &mut adam_critic1,
                    &mut adam_critic2,
                    &mut adam_alpha,
                )
                .map_err(|source| TrainError::Update { step, source })?;
                last_losses = losses;
            }
        }

        if step % config.eval_interval == 0 || step == config.total_steps {
            let checkpoint = assemble_checkpoint(
                &schema.name,
                &reward_hash,
                step as u64,
                log_alpha,
                &schema.action_low,
                &schema.action_high,
                &policy_spec,
                &policy,
                &critic_spec,
                &critic1,
                &critic2,
                &target1,
                &target2,
            );
            let eval_return = evaluate(&checkpoint, env_name, program, config, step)?;
            log.rows.push(TrainingLogRow {
                env_step: step,
                eval_return_mean: eval_return,
                critic1_loss: last_losses.critic1,
                critic2_loss: last_losses.critic2,
                policy_loss: last_losses.policy,
                alpha: last_losses.alpha,
            });
        }
    }

    let checkpoint = assemble_checkpoint(
        &schema.name,
        &reward_hash,
        config.total_steps as u64,
        log_alpha,
        &schema.action_low,
        &schema.action_high,
        &policy_spec,
        &policy,
        &critic_spec,
        &critic1,
        &critic2,
        &target1,
        &target2,
    );
    Ok((checkpoint, log))
}

/// One SAC gradient step over a sampled minibatch (critics, policy,
/// temperature, then Polyak target averaging).
#[allow(clippy::too_many_arguments)]
fn sac_update(
    rng: &mut ChaCha12Rng,
    buffer: &ReplayBuffer,
    config: &SacConfig,
    k: usize,
    policy_spec: &MlpSpec,
    critic_spec: &MlpSpec,
    policy: &mut ParamStore,
    critic1: &mut ParamStore,
    critic2: &mut ParamStore,
    target1: &mut ParamStore,
    target2: &mut ParamStore,
    log_alpha: &mut f64,
    adam_policy: &mut AdamState,
    adam_critic1: &mut AdamState,
    adam_critic2: &mut AdamState,
    adam_alpha: &mut AdamState,
) -> Result<Losses, UpdateError> {
    let batch = assemble_batch(buffer, rng, config.batch_size);
    let alpha = log_alpha.exp();
    let rows = config.batch_size;

    let next_eps = normal_noise(rng, rows, k);
    let targets = update::critic_targets(
        policy_spec,
        policy,
        critic_spec,
        target1,
        target2,
        &batch,
        next_eps,
        alpha,
        config.gamma,
    )?;

    let obs_actions = update::concat_obs_actions(&batch.obs, &batch.actions);
    let (c1_loss, c1_grads) = update::critic_loss_grad(critic_spec, critic1, &obs_actions, &targets)?;
    let (c2_loss, c2_grads) = update::critic_loss_grad(critic_spec, critic2, &obs_actions, &targets)?;
    adam_critic1.step(critic1.as_flat_mut(), c1_grads.as_flat())?;
    adam_critic2.step(critic2.as_flat_mut(), c2_grads.as_flat())?;

    let eps = normal_noise(rng, rows, k);
    let (p_loss, p_grads, log_probs) = update::policy_loss_grad(
        policy_spec,
        policy,
        critic_spec,
        critic1,
        critic2,
        &batch.obs,
        eps,
        alpha,
    )?;
    adam_policy.step(policy.as_flat_mut(), p_grads.as_flat())?;

    let (t_loss, t_grad) =
        update::temperature_loss_grad(*log_alpha, &log_probs, config.target_entropy);
    if !t_loss.is_finite() {
        return Err(UpdateError::NonFinite("temperature_loss"));
    }
    let mut log_alpha_vec = [*log_alpha];
    adam_alpha.step(&mut log_alpha_vec, &[t_grad])?;
    *log_alpha = log_alpha_vec[0];

    target1.polyak_from(critic1, config.tau);
    target2.polyak_from(critic2, config.tau);

    Ok(Losses {
        critic1: c1_loss,
        critic2: c2_loss,
        policy: p_loss,
        temperature: t_loss,
        alpha: log_alpha.exp(),
    })
}

fn assemble_batch(buffer: &ReplayBuffer, rng: &mut ChaCha12Rng, batch_size: usize) -> UpdateBatch {
    let indices = buffer.sample_indices(rng, batch_size);
    let first = buffer.get(indices[0]);
    let obs_dim = first.obs.len();
    let k = first.action.len();
    let mut obs = Mat::zeros(batch_size, obs_dim);
    let mut actions = Mat::zeros(batch_size, k);
    let mut next_obs = Mat::zeros(batch_size, obs_dim);
    let mut rewards = Vec::with_capacity(batch_size);
    let mut terminated = Vec::with_capacity(batch_size);
    for (r, &idx) in indices.iter().enumerate() {
        let t = buffer.get(idx);
        obs.row_mut(r).copy_from_slice(&t.obs);
        actions.row_mut(r).copy_from_slice(&t.action);
        next_obs.row_mut(r).copy_from_slice(&t.next_obs);
        rewards.push(t.reward);
        terminated.push(if t.terminated { 1.0 } else { 0.0 });
    }
    UpdateBatch {
        obs,
        actions,
        rewards,
        next_obs,
        terminated,
    }
}

fn normal_noise(rng: &mut ChaCha12Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect(),
    )
}

#[allow(clippy::too_many_arguments)]
fn assemble_checkpoint(
    env_name: &str,
    reward_hash: &str,
    train_steps: u64,
    log_alpha: f64,
    action_low: &[f64],
    action_high: &[f64],
    policy_spec: &MlpSpec,
    policy: &ParamStore,
    critic_spec: &MlpSpec,
    critic1: &ParamStore,
    critic2: &ParamStore,
    target1: &ParamStore,
    target2: &ParamStore,
) -> PolicyCheckpoint {
    PolicyCheckpoint {
        environment: env_name.to_string(),
        reward_program_sha256: reward_hash.to_string(),
        train_steps,
        log_alpha,
        action_low: action_low.to_vec(),
        action_high: action_high.to_vec(),
        policy_spec: policy_spec.clone(),
        policy: policy.clone(),
        critic_spec: critic_spec.clone(),
        critic1: critic1.clone(),
        critic2: critic2.clone(),
        target1: target1.clone(),
        target2: target2.clone(),
    }
}

/// Mean return of deterministic evaluation episodes at one log point.
fn evaluate(
    checkpoint: &PolicyCheckpoint,
    env_name: &str,
    program: &RewardProgram,
    config: &SacConfig,
    step: usize,
) -> Result<f64, TrainError> {
    let mut eval_env = envs::make_env(env_name)?;
    let mut policy = CheckpointPolicy { checkpoint };
    let base_seed = eval_seed_base(config.seed, step);
    let trajs = envs::rollout(
        eval_env.as_mut(),
        &mut policy,
        program,
        config.eval_episodes,
        base_seed,
    )
    .map_err(|e| match e {
        envs::RolloutError::Reward { step: s, source, .. } => {
            TrainError::Reward { step: s, source }
        }
        envs::RolloutError::Env(e) => TrainError::Env(e),
        envs::RolloutError::NoEpisodes => TrainError::Config("eval episodes must be >= 1".into()),
    })?;
    let mean = trajs.iter().map(|t| t.total_reward()).sum::<f64>() / trajs.len() as f64;
    Ok(mean)
}

/// Seeds for in-training evaluation episodes: a fixed mix of the run seed
/// and the log step, so logs are reproducible and distinct per interval.
fn eval_seed_base(seed: u64, step: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(step as u64)
}

/// A trained policy acting through the generic rollout interface in
/// stochastic mode, with its own seeded noise stream.
pub struct StochasticPolicy<'a> {
    pub checkpoint: &'a PolicyCheckpoint,
    pub rng: ChaCha12Rng,
}

impl<'a> StochasticPolicy<'a> {
    pub fn new(checkpoint: &'a PolicyCheckpoint, seed: u64) -> Self {
        StochasticPolicy {
            checkpoint,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for StochasticPolicy<'_> {
    fn act(&mut self, obs: &Observation) -> Vec<f64> {
        self.checkpoint
            .act(obs.values(), false, Some(&mut self.rng))
            .expect("schema-conforming observation")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_reward;

    fn tiny_config() -> SacConfig {
        let mut c = SacConfig::for_env("pointmass").unwrap();
        c.total_steps = 600;
        c.warmup_steps = 200;
        c.batch_size = 32;
        c.replay_capacity = 2_000;
        c.hidden = vec![16, 16];
        c.eval_interval = 300;
        c.eval_episodes = 2;
        c
    }

    #[test]
    fn config_defaults_match_contract() {
        let c = SacConfig::for_env("pointmass").unwrap();
        assert_eq!(c.total_steps, 30_000);
        assert_eq!(c.target_entropy, -1.0);
        let c = SacConfig::for_env("cartpole").unwrap();
        assert_eq!(c.total_steps, 60_000);
    }

    #[test]
    fn warmup_longer_than_total_is_a_precondition_error() {
        let mut c = tiny_config();
        c.warmup_steps = c.total_steps + 1;
        let program = parse_reward("reward = vx").unwrap();
        assert!(matches!(
            train("pointmass", &program, &c),
            Err(TrainError::Config(_))
        ));
    }

    #[test]
    fn training_is_seed_deterministic() {
        let program = parse_reward("reward = vx").unwrap();
        let c = tiny_config();
        let (ckpt_a, log_a) = train("pointmass", &program, &c).unwrap();
        let (ckpt_b, log_b) = train("pointmass", &program, &c).unwrap();
        assert_eq!(log_a, log_b);
        assert_eq!(ckpt_a.policy.as_flat(), ckpt_b.policy.as_flat());
        assert_eq!(ckpt_a.log_alpha, ckpt_b.log_alpha);
    }

    #[test]
    fn training_log_steps_increase_and_stay_finite() {
        let program = parse_reward("reward = -(x^2)").unwrap();
        let (ckpt, log) = train("pointmass", &program, &tiny_config()).unwrap();
        assert!(!log.rows.is_empty());
        let mut prev = 0;
        for row in &log.rows {
            assert!(row.env_step > prev);
            prev = row.env_step;
            assert!(row.eval_return_mean.is_finite());
            assert!(row.critic1_loss.is_finite());
            assert!(row.alpha > 0.0);
        }
        assert!(ckpt.alpha() > 0.0);
        assert_eq!(ckpt.train_steps, 600);
    }

    #[test]
    fn runtime_reward_error_aborts_with_dsl_source() {
        // log(vx) fails as soon as vx <= 0, which random warmup hits fast.
        let program = parse_reward("reward = log(vx)").unwrap();
        match train("pointmass", &program, &tiny_config()) {
            Err(e @ TrainError::Reward { .. }) => {
                assert!(e.as_dsl().is_some());
            }
            other => panic!("expected reward error, got {other:?}"),
        }
    }

    #[test]
    fn log_csv_round_trips() {
        let log = TrainingLog {
            rows: vec![TrainingLogRow {
                env_step: 2000,
                eval_return_mean: 1.25,
                critic1_loss: 0.5,
                critic2_loss: 0.75,
                policy_loss: -0.1,
                alpha: 0.2,
            }],
        };
        assert_eq!(TrainingLog::from_csv(&log.to_csv()).unwrap(), log);
    }
}
