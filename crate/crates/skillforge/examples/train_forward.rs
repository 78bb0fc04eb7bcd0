//! Train a forward-motion policy on the point mass with a scripted reward,
//! no LLM involved: the trainer and environments working alone.
//!
//!     cargo run --release --example train_forward
//!
//! With default settings (30k steps) this takes a few minutes; pass a step
//! count to shorten it, e.g. `cargo run --example train_forward -- 5000`.

use skillforge::dsl::parse_reward;
use skillforge::envs::{make_env, rollout, ConstantPolicy};
use skillforge::sac::{train, CheckpointPolicy, SacConfig};

fn main() {
    let steps: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(30_000);

    let program = parse_reward("reward = vx").expect("scripted reward parses");
    let mut config = SacConfig::for_env("pointmass").expect("known env");
    config.total_steps = steps;
    config.seed = 7;

    // Upper bound for context: hold maximum action the whole episode.
    let mut env = make_env("pointmass").unwrap();
    let mut full_push = ConstantPolicy(vec![1.0]);
    let oracle = rollout(env.as_mut(), &mut full_push, &program, 1, 0).unwrap();
    let oracle_x = oracle[0].steps.last().unwrap().next.values()[0];
    println!("constant full push reaches x = {oracle_x:.2} m");

    println!("training for {} env steps...", config.total_steps);
    let start = std::time::Instant::now();
    let (checkpoint, log) = train("pointmass", &program, &config).expect("training succeeds");
    println!("trained in {:.1?}", start.elapsed());
    for row in &log.rows {
        println!(
            "  step {:>6}  eval return {:>8.2}  critic loss {:>8.4}  alpha {:.4}",
            row.env_step, row.eval_return_mean, row.critic1_loss, row.alpha
        );
    }

    // Deterministic evaluation episodes with the trained policy.
    let mut env = make_env("pointmass").unwrap();
    let mut policy = CheckpointPolicy {
        checkpoint: &checkpoint,
    };
    let trajs = rollout(env.as_mut(), &mut policy, &program, 10, 1000).unwrap();
    let mean_final_x: f64 = trajs
        .iter()
        .map(|t| t.steps.last().unwrap().next.values()[0])
        .sum::<f64>()
        / trajs.len() as f64;
    println!("mean final x over 10 deterministic episodes: {mean_final_x:.2} m");
}
