//! Run the bundled desk-task suite through the scripted model and print the
//! aggregate success table (shortened training so it finishes quickly; the
//! acceptance suite runs the same tasks at full budget).
//!
//!     cargo run --release --example bench_suite

use skillforge::cli::{BenchOptions, BenchTask};
use skillforge::llm::ProviderConfig;
use skillforge::orchestrator::SacOverrides;

fn main() {
    let tasks: Vec<BenchTask> =
        serde_json::from_str(include_str!("../tasks/desk_suite.json")).expect("bundled suite");
    let out_dir = std::env::temp_dir().join(format!("skillforge-bench-{}", std::process::id()));
    let options = BenchOptions {
        provider: ProviderConfig::stub("happy_path"),
        out_dir,
        jobs: 2,
        iterations: 2,
        attempts: 3,
        seed: 0,
        sac: SacOverrides {
            total_steps: Some(12_000),
            ..Default::default()
        },
        reward_only: true,
    };
    let summary = skillforge::cli::bench_run(&tasks, &options);
    print!("{}", skillforge::cli::bench_render_text(&summary, true));
}
