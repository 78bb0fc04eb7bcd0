//! One Soft Actor-Critic gradient step: twin critic regression to an
//! entropy-regularized bootstrap target, a reparameterized policy step
//! against the minimum critic, automatic temperature tuning toward a target
//! entropy, then Polyak averaging of the target critics.
//!
//! Losses and gradients are exposed as pure functions of (parameters,
//! batch, noise) so finite-difference checks can probe them directly.

use thiserror::Error;

use crate::nn::{mlp_backward, mlp_forward, Mat, MlpSpec, NnError, ParamStore};

use super::policy::{sample_actions, SampledActions};

#[derive(Debug, Error)]
pub enum UpdateError {
    #[error("non-finite value in {0} during SAC update")]
    NonFinite(&'static str),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// A minibatch assembled from replay transitions.
pub struct UpdateBatch {
    pub obs: Mat,
    pub actions: Mat,
    pub rewards: Vec<f64>,
    pub next_obs: Mat,
    pub terminated: Vec<f64>,
}

/// Per-update loss values, all finite when the update succeeds.
#[derive(Debug, Clone, Copy)]
pub struct Losses {
    pub critic1: f64,
    pub critic2: f64,
    pub policy: f64,
    pub temperature: f64,
    pub alpha: f64,
}

/// Concatenate observations and actions into critic inputs.
pub fn concat_obs_actions(obs: &Mat, actions: &Mat) -> Mat {
    debug_assert_eq!(obs.rows, actions.rows);
    let mut out = Mat::zeros(obs.rows, obs.cols + actions.cols);
    for r in 0..obs.rows {
        out.row_mut(r)[..obs.cols].copy_from_slice(obs.row(r));
        out.row_mut(r)[obs.cols..].copy_from_slice(actions.row(r));
    }
    out
}

fn critic_values(spec: &MlpSpec, critic: &ParamStore, input: &Mat) -> Result<Vec<f64>, NnError> {
    let (out, _) = mlp_forward(spec, critic, input)?;
    Ok(out.data)
}

/// Bootstrap targets
/// `y = r + gamma * (1-terminated) * (min_i Qt_i(s',a') - alpha * log pi(a'|s'))`,
/// with `a'` freshly sampled from the policy using the supplied noise.
/// Nothing here carries gradients.
#[allow(clippy::too_many_arguments)]
pub fn critic_targets(
    policy_spec: &MlpSpec,
    policy: &ParamStore,
    critic_spec: &MlpSpec,
    target1: &ParamStore,
    target2: &ParamStore,
    batch: &UpdateBatch,
    next_eps: Mat,
    alpha: f64,
    gamma: f64,
) -> Result<Vec<f64>, UpdateError> {
    let k = next_eps.cols;
    let (head, _) = mlp_forward(policy_spec, policy, &batch.next_obs)?;
    let sampled = sample_actions(&head, k, next_eps);
    let next_input = concat_obs_actions(&batch.next_obs, &sampled.actions);
    let q1 = critic_values(critic_spec, target1, &next_input)?;
    let q2 = critic_values(critic_spec, target2, &next_input)?;
    let mut targets = Vec::with_capacity(batch.rewards.len());
    for b in 0..batch.rewards.len() {
        let soft_value = q1[b].min(q2[b]) - alpha * sampled.log_prob[b];
        let y = batch.rewards[b] + gamma * (1.0 - batch.terminated[b]) * soft_value;
        if !y.is_finite() {
            return Err(UpdateError::NonFinite("critic_target"));
        }
        targets.push(y);
    }
    Ok(targets)
}

/// Mean-squared-error regression of one critic to fixed targets; returns
/// the loss and the critic's parameter gradients.
pub fn critic_loss_grad(
    critic_spec: &MlpSpec,
    critic: &ParamStore,
    obs_actions: &Mat,
    targets: &[f64],
) -> Result<(f64, ParamStore), UpdateError> {
    let (out, cache) = mlp_forward(critic_spec, critic, obs_actions)?;
    let n = targets.len() as f64;
    let mut loss = 0.0;
    let mut grad_out = Mat::zeros(out.rows, 1);
    for (b, &target) in targets.iter().enumerate() {
        let diff = out.data[b] - target;
        loss += diff * diff / n;
        grad_out.data[b] = 2.0 * diff / n;
    }
    if !loss.is_finite() {
        return Err(UpdateError::NonFinite("critic_loss"));
    }
    let (grads, _) = mlp_backward(critic_spec, critic, &cache, &grad_out)?;
    Ok((loss, grads))
}

/// Reparameterized policy objective mean(alpha * log pi - min_i Q_i) with
/// gradients flowing through both the entropy term and the squashed action
/// into the (frozen) critics. Returns the loss, the policy parameter
/// gradients and the per-sample log probabilities (for temperature tuning).
#[allow(clippy::too_many_arguments)]
pub fn policy_loss_grad(
    policy_spec: &MlpSpec,
    policy: &ParamStore,
    critic_spec: &MlpSpec,
    critic1: &ParamStore,
    critic2: &ParamStore,
    obs: &Mat,
    eps: Mat,
    alpha: f64,
) -> Result<(f64, ParamStore, Vec<f64>), UpdateError> {
    let rows = obs.rows;
    let k = eps.cols;
    let (head, head_cache) = mlp_forward(policy_spec, policy, obs)?;
    let sampled: SampledActions = sample_actions(&head, k, eps);

    let input = concat_obs_actions(obs, &sampled.actions);
    let (q1_out, q1_cache) = mlp_forward(critic_spec, critic1, &input)?;
    let (q2_out, q2_cache) = mlp_forward(critic_spec, critic2, &input)?;

    let n = rows as f64;
    let mut loss = 0.0;
    // dLoss/dQ_i masked by which critic realizes the minimum per sample.
    let mut g1 = Mat::zeros(rows, 1);
    let mut g2 = Mat::zeros(rows, 1);
    for b in 0..rows {
        let (q1, q2) = (q1_out.data[b], q2_out.data[b]);
        loss += (alpha * sampled.log_prob[b] - q1.min(q2)) / n;
        if q1 <= q2 {
            g1.data[b] = -1.0 / n;
        } else {
            g2.data[b] = -1.0 / n;
        }
    }
    if !loss.is_finite() {
        return Err(UpdateError::NonFinite("policy_loss"));
    }

    // dLoss/d(action) from the chosen critic's input gradient.
    let (_, in_grad1) = mlp_backward(critic_spec, critic1, &q1_cache, &g1)?;
    let (_, in_grad2) = mlp_backward(critic_spec, critic2, &q2_cache, &g2)?;
    let obs_cols = obs.cols;

    // Chain everything into gradients w.r.t. the policy head outputs.
    let mut head_grad = Mat::zeros(rows, 2 * k);
    for b in 0..rows {
        for j in 0..k {
            let t = sampled.actions.data[b * k + j];
            let dtanh = 1.0 - t * t;
            let denom = dtanh + super::policy::TANH_CORRECTION_EPS;
            // d log pi / du through the tanh correction term.
            let dlogp_du = 2.0 * t * dtanh / denom;
            let da_db = in_grad1.row(b)[obs_cols + j] + in_grad2.row(b)[obs_cols + j];
            // du/dmean = 1; du/dlogstd = std * eps (zero where clamped).
            let du_dlogstd = if sampled.clamp_open[b * k + j] {
                sampled.std.data[b * k + j] * sampled.eps.data[b * k + j]
            } else {
                0.0
            };
            let dloss_du = (alpha / n) * dlogp_du + da_db * dtanh;
            head_grad.data[b * 2 * k + j] = dloss_du;
            // The Gaussian term contributes -1 per log-std (reparameterized
            // likelihood of its own sample), plus the flowed-through paths.
            let gaussian_dlogstd = if sampled.clamp_open[b * k + j] { -1.0 } else { 0.0 };
            head_grad.data[b * 2 * k + k + j] =
                (alpha / n) * gaussian_dlogstd + dloss_du * du_dlogstd;
        }
    }
    let (grads, _) = mlp_backward(policy_spec, policy, &head_cache, &head_grad)?;
    Ok((loss, grads, sampled.log_prob))
}

/// Temperature objective -alpha * mean(log pi + target_entropy) in
/// log-alpha space; returns (loss, d loss / d log_alpha).
pub fn temperature_loss_grad(log_alpha: f64, log_probs: &[f64], target_entropy: f64) -> (f64, f64) {
    let alpha = log_alpha.exp();
    let mean_term =
        log_probs.iter().map(|lp| lp + target_entropy).sum::<f64>() / log_probs.len() as f64;
    (-alpha * mean_term, -alpha * mean_term)
}
