//! Tour of the reward and metric languages: parsing, validation, canonical
//! printing, evaluation, and the error messages the repair loop feeds back.
//!
//!     cargo run --example dsl_tour

use skillforge::dsl::{
    eval_metrics, eval_reward, parse_eval, parse_reward, print_reward, validate_eval,
    validate_reward, TransitionCtx,
};
use skillforge::envs::{self, rollout, ConstantPolicy};

fn main() {
    let schema = envs::schema("pointmass").expect("bundled environment");

    // Parse and validate a reward program with a binding. Bindings are
    // numeric; booleans live inside if(...) conditions.
    let source = "# brake near the origin\nlet dist = abs(x)\nreward = if(dist < 0.5, -(vx^2), -dist)";
    let program = parse_reward(source).expect("parses");
    validate_reward(&program, &schema).expect("validates against pointmass");
    println!("canonical form:\n{}", print_reward(&program));

    // Evaluate it on one hand-built transition.
    let ctx = TransitionCtx {
        schema: &schema,
        prev: &[0.30, 1.0],
        next: &[0.35, 0.9],
        action: &[-0.2],
        t: 4,
    };
    println!("reward at the sample transition: {}", eval_reward(&program, &ctx).unwrap());

    // Every failure mode is a single-line, position-carrying message.
    for bad in [
        "reward = (1.0",                 // unclosed parenthesis
        "reward = torso_height",         // unknown identifier (validate)
        "reward = vx + (vx > 0)",        // boolean used as number
        "reward = 1.0 / (x - x)",        // division by zero (runtime)
    ] {
        let outcome = parse_reward(bad)
            .map_err(|e| e.to_string())
            .and_then(|p| validate_reward(&p, &schema).map(|_| p).map_err(|e| e.to_string()))
            .and_then(|p| eval_reward(&p, &ctx).map_err(|e| e.to_string()));
        match outcome {
            Ok(v) => println!("{bad:<24} => {v}"),
            Err(e) => println!("{bad:<24} => {e}"),
        }
    }

    // Metrics aggregate per episode, then summarize across episodes.
    let metrics = parse_eval(
        "metric final_x = final(x)\nmetric mean_speed = mean(abs(vx))\nmetric travel = sum(vx * dt)",
    )
    .expect("parses");
    validate_eval(&metrics, &schema).expect("validates");
    let mut env = envs::make_env("pointmass").unwrap();
    let mut policy = ConstantPolicy(vec![1.0]);
    let reward = parse_reward("reward = vx").unwrap();
    let trajs = rollout(env.as_mut(), &mut policy, &reward, 3, 0).unwrap();
    let report = eval_metrics(&metrics, &schema, &trajs, "dsl-tour").unwrap();
    println!("\nmeasured over 3 constant-push episodes:");
    for m in &report.metrics {
        println!("  {:<12} mean {:>10.4}  std {:>8.4}", m.name, m.mean, m.std);
    }
}
