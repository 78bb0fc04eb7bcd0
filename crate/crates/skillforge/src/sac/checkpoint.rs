//! Trained-agent checkpoints: policy, twin critics, their targets and the
//! temperature, serialized as a flat JSON document with base64-coded
//! little-endian f64 arrays. Round-trips are bit-exact.

use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::{Observation, Policy};
use crate::nn::{decode_f64s, encode_f64s, mlp_forward, Mat, MlpSpec, NnError, ParamStore};
use crate::util;

use super::policy::{deterministic_action, sample_actions, scale_to_bounds};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: invalid checkpoint JSON: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: unsupported checkpoint version {got} (this build reads {want})")]
    Version { path: String, got: u32, want: u32 },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(#[from] NnError),
    #[error("observation has {got} values, policy expects {want}")]
    ObsShape { want: usize, got: usize },
}

/// A trained agent, sufficient to act deterministically or stochastically
/// and to resume evaluation.
#[derive(Debug, Clone)]
pub struct PolicyCheckpoint {
    pub environment: String,
    pub reward_program_sha256: String,
    pub train_steps: u64,
    pub log_alpha: f64,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub policy_spec: MlpSpec,
    pub policy: ParamStore,
    pub critic_spec: MlpSpec,
    pub critic1: ParamStore,
    pub critic2: ParamStore,
    pub target1: ParamStore,
    pub target2: ParamStore,
}

impl PolicyCheckpoint {
    /// Realized temperature, always positive (stored in log space).
    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn action_dim(&self) -> usize {
        self.action_low.len()
    }

    /// Action for one observation. Deterministic mode squashes the head
    /// means; stochastic mode draws noise from the caller's stream. Either
    /// way every component lies within the action bounds.
    pub fn act(
        &self,
        obs: &[f64],
        deterministic: bool,
        rng: Option<&mut rand_chacha::ChaCha12Rng>,
    ) -> Result<Vec<f64>, CheckpointError> {
        if obs.len() != self.policy_spec.input {
            return Err(CheckpointError::ObsShape {
                want: self.policy_spec.input,
                got: obs.len(),
            });
        }
        let k = self.action_dim();
        let input = Mat::from_row(obs);
        let (head, _) = mlp_forward(&self.policy_spec, &self.policy, &input)
            .map_err(CheckpointError::Corrupt)?;
        let tanh_action = if deterministic {
            deterministic_action(head.row(0), k)
        } else {
            let rng = rng.expect("stochastic act needs a caller-provided rng");
            let eps = Mat::from_vec(1, k, (0..k).map(|_| StandardNormal.sample(rng)).collect());
            let sampled = sample_actions(&head, k, eps);
            sampled.actions.data
        };
        Ok(scale_to_bounds(&tanh_action, &self.action_low, &self.action_high))
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION,
            environment: self.environment.clone(),
            reward_program_sha256: self.reward_program_sha256.clone(),
            train_steps: self.train_steps,
            log_alpha: self.log_alpha,
            action_low: self.action_low.clone(),
            action_high: self.action_high.clone(),
            policy_spec: self.policy_spec.clone(),
            critic_spec: self.critic_spec.clone(),
            policy_b64: encode_f64s(self.policy.as_flat()),
            critic1_b64: encode_f64s(self.critic1.as_flat()),
            critic2_b64: encode_f64s(self.critic2.as_flat()),
            target1_b64: encode_f64s(self.target1.as_flat()),
            target2_b64: encode_f64s(self.target2.as_flat()),
        };
        let json = serde_json::to_string_pretty(&file).expect("checkpoint serializes");
        util::write_atomic(path, json.as_bytes()).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let text = std::fs::read_to_string(path).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: CheckpointFile =
            serde_json::from_str(&text).map_err(|source| CheckpointError::Json {
                path: path.display().to_string(),
                source,
            })?;
        if file.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version {
                path: path.display().to_string(),
                got: file.version,
                want: CHECKPOINT_VERSION,
            });
        }
        let decode = |b64: &str, spec: &MlpSpec| -> Result<ParamStore, NnError> {
            ParamStore::from_flat(spec, decode_f64s(b64, spec.param_count())?)
        };
        Ok(PolicyCheckpoint {
            environment: file.environment,
            reward_program_sha256: file.reward_program_sha256,
            train_steps: file.train_steps,
            log_alpha: file.log_alpha,
            action_low: file.action_low,
            action_high: file.action_high,
            policy: decode(&file.policy_b64, &file.policy_spec)?,
            critic1: decode(&file.critic1_b64, &file.critic_spec)?,
            critic2: decode(&file.critic2_b64, &file.critic_spec)?,
            target1: decode(&file.target1_b64, &file.critic_spec)?,
            target2: decode(&file.target2_b64, &file.critic_spec)?,
            policy_spec: file.policy_spec,
            critic_spec: file.critic_spec,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    environment: String,
    reward_program_sha256: String,
    train_steps: u64,
    log_alpha: f64,
    action_low: Vec<f64>,
    action_high: Vec<f64>,
    policy_spec: MlpSpec,
    critic_spec: MlpSpec,
    policy_b64: String,
    critic1_b64: String,
    critic2_b64: String,
    target1_b64: String,
    target2_b64: String,
}

/// Evaluation adapter: a checkpoint acting deterministically as a rollout
/// policy.
pub struct CheckpointPolicy<'a> {
    pub checkpoint: &'a PolicyCheckpoint,
}

impl Policy for CheckpointPolicy<'_> {
    fn act(&mut self, obs: &Observation) -> Vec<f64> {
        self.checkpoint
            .act(obs.values(), true, None)
            .expect("schema-conforming observation")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn sample_checkpoint() -> PolicyCheckpoint {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let policy_spec = MlpSpec::new(2, vec![8], 2);
        let critic_spec = MlpSpec::new(3, vec![8], 1);
        PolicyCheckpoint {
            environment: "pointmass".into(),
            reward_program_sha256: "deadbeef".into(),
            train_steps: 123,
            log_alpha: -1.5,
            action_low: vec![-1.0],
            action_high: vec![1.0],
            policy: ParamStore::init(&policy_spec, &mut rng),
            critic1: ParamStore::init(&critic_spec, &mut rng),
            critic2: ParamStore::init(&critic_spec, &mut rng),
            target1: ParamStore::init(&critic_spec, &mut rng),
            target2: ParamStore::init(&critic_spec, &mut rng),
            policy_spec,
            critic_spec,
        }
    }

    #[test]
    fn save_load_round_trip_reproduces_actions() {
        let ckpt = sample_checkpoint();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.json");
        ckpt.save(&path).unwrap();
        let loaded = PolicyCheckpoint::load(&path).unwrap();
        for obs in [[0.0, 0.0], [1.0, -0.5], [-2.0, 0.3]] {
            let a = ckpt.act(&obs, true, None).unwrap();
            let b = loaded.act(&obs, true, None).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(loaded.alpha(), (-1.5_f64).exp());
    }

    #[test]
    fn zero_policy_acts_zero() {
        let mut ckpt = sample_checkpoint();
        ckpt.policy = ParamStore::zeros(&ckpt.policy_spec);
        assert_eq!(ckpt.act(&[0.4, -0.2], true, None).unwrap(), vec![0.0]);
    }

    #[test]
    fn actions_respect_bounds_for_any_params() {
        let ckpt = sample_checkpoint();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for i in 0..50 {
            let obs = [i as f64 * 3.7, -(i as f64)];
            let a = ckpt.act(&obs, false, Some(&mut rng)).unwrap();
            assert!(a[0] >= -1.0 && a[0] <= 1.0);
        }
    }

    #[test]
    fn deterministic_act_is_repeatable() {
        let ckpt = sample_checkpoint();
        let a = ckpt.act(&[0.1, 0.9], true, None).unwrap();
        let b = ckpt.act(&[0.1, 0.9], true, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn version_mismatch_rejected() {
        let ckpt = sample_checkpoint();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.json");
        ckpt.save(&path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text = text.replace("\"version\": 1", "\"version\": 999");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            PolicyCheckpoint::load(&path),
            Err(CheckpointError::Version { got: 999, .. })
        ));
    }

    #[test]
    fn obs_shape_mismatch_rejected() {
        let ckpt = sample_checkpoint();
        assert!(matches!(
            ckpt.act(&[1.0], true, None),
            Err(CheckpointError::ObsShape { want: 2, got: 1 })
        ));
    }
}
