//! The whole closed loop, end to end, against the bundled scripted stub:
//! describe the environment, generate a reward program, train, roll out,
//! generate metrics, measure, review — with every artifact persisted.
//!
//!     cargo run --release --example full_loop_stub
//!
//! Uses a shortened training budget so it finishes quickly; the learned
//! policy is still good enough to satisfy the stub reviewer's thresholds.

use skillforge::llm::ProviderConfig;
use skillforge::orchestrator::{Runner, SacOverrides, TaskSpec};

fn main() {
    let run_dir = std::env::temp_dir().join(format!("skillforge-loop-{}", std::process::id()));
    let task = TaskSpec {
        task: "move forward as far as possible".into(),
        environment: "pointmass".into(),
        outer_iterations: 3,
        inner_attempts: 3,
        sac: SacOverrides {
            total_steps: Some(12_000),
            ..Default::default()
        },
        seed: 42,
    };

    let mut runner = Runner::create(&run_dir, task, ProviderConfig::stub("happy_path"))
        .expect("fresh run directory");
    let state = runner.run().expect("loop executes");

    println!("status: {:?}", state.status);
    for record in &state.iterations {
        println!("\niteration {}", record.index);
        println!(
            "  reward attempts: {}, eval attempts: {}",
            record.reward_attempts.len(),
            record.eval_attempts.len()
        );
        if let Some(program) = &record.reward_program {
            println!("  accepted reward program:\n    {}", program.trim().replace('\n', "\n    "));
        }
        if let Some(eval) = &record.eval_program {
            println!("  accepted eval program:\n    {}", eval.trim().replace('\n', "\n    "));
        }
        if let Some(ret) = record.final_eval_return {
            println!("  final training eval return: {ret:.2}");
        }
        if let Some(v) = &record.verdict {
            println!("  verdict: {}", if v.satisfied { "SATISFIED" } else { "not satisfied" });
        }
    }
    println!("\nartifacts in {}", run_dir.display());
    for entry in std::fs::read_dir(run_dir.join("iter_000")).expect("iteration dir") {
        println!("  iter_000/{}", entry.unwrap().file_name().to_string_lossy());
    }
}
