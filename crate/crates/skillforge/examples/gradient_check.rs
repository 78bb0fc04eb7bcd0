//! Verify the analytic gradients behind the trainer against central finite
//! differences: raw MLP backprop, then each SAC loss.
//!
//!     cargo run --example gradient_check

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use skillforge::nn::{gradient_check, mlp_backward, mlp_forward, Mat, MlpSpec, ParamStore};
use skillforge::sac::update;

fn main() {
    let mut rng = ChaCha12Rng::seed_from_u64(1);

    // Plain MLP regression loss.
    let spec = MlpSpec::new(4, vec![32, 32], 2);
    let params = ParamStore::init(&spec, &mut rng);
    let input = Mat::from_vec(6, 4, (0..24).map(|i| (i as f64 * 0.7).sin()).collect());
    let err = gradient_check(
        |flat| {
            let p = ParamStore::from_flat(&spec, flat.to_vec()).unwrap();
            let (out, cache) = mlp_forward(&spec, &p, &input).unwrap();
            let n = out.data.len() as f64;
            let loss = out.data.iter().map(|v| v * v / n).sum();
            let grad_out = Mat::from_vec(
                out.rows,
                out.cols,
                out.data.iter().map(|v| 2.0 * v / n).collect(),
            );
            let (grads, _) = mlp_backward(&spec, &p, &cache, &grad_out).unwrap();
            (loss, grads.as_flat().to_vec())
        },
        params.as_flat(),
    );
    println!("mlp loss            max relative error {err:.3e}");

    // SAC losses on a random batch.
    let (obs_dim, k, rows) = (3, 1, 16);
    let policy_spec = MlpSpec::new(obs_dim, vec![16, 16], 2 * k);
    let critic_spec = MlpSpec::new(obs_dim + k, vec![16, 16], 1);
    let policy = ParamStore::init(&policy_spec, &mut rng);
    let critic1 = ParamStore::init(&critic_spec, &mut rng);
    let critic2 = ParamStore::init(&critic_spec, &mut rng);
    let obs = Mat::from_vec(
        rows,
        obs_dim,
        (0..rows * obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
    );
    let actions = Mat::from_vec(rows, k, (0..rows).map(|_| rng.random_range(-0.9..0.9)).collect());
    let targets: Vec<f64> = (0..rows).map(|_| rng.random_range(-2.0..2.0)).collect();
    let obs_actions = update::concat_obs_actions(&obs, &actions);

    let err = gradient_check(
        |flat| {
            let c = ParamStore::from_flat(&critic_spec, flat.to_vec()).unwrap();
            let (loss, grads) =
                update::critic_loss_grad(&critic_spec, &c, &obs_actions, &targets).unwrap();
            (loss, grads.as_flat().to_vec())
        },
        critic1.as_flat(),
    );
    println!("critic loss         max relative error {err:.3e}");

    let eps = Mat::from_vec(rows, k, (0..rows).map(|_| rng.random_range(-1.5..1.5)).collect());
    let err = gradient_check(
        |flat| {
            let p = ParamStore::from_flat(&policy_spec, flat.to_vec()).unwrap();
            let (loss, grads, _) = update::policy_loss_grad(
                &policy_spec,
                &p,
                &critic_spec,
                &critic1,
                &critic2,
                &obs,
                eps.clone(),
                0.2,
            )
            .unwrap();
            (loss, grads.as_flat().to_vec())
        },
        policy.as_flat(),
    );
    println!("policy loss         max relative error {err:.3e}");

    let log_probs: Vec<f64> = (0..rows).map(|_| rng.random_range(-3.0..0.5)).collect();
    let err = gradient_check(
        |x| {
            let (loss, grad) = update::temperature_loss_grad(x[0], &log_probs, -1.0);
            (loss, vec![grad])
        },
        &[-0.7],
    );
    println!("temperature loss    max relative error {err:.3e}");
}
