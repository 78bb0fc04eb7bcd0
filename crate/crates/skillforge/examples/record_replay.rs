//! Record a run's LLM traffic into a cassette over real HTTP (against the
//! bundled mock server), then replay it offline with digest verification.
//!
//!     cargo run --release --example record_replay

use skillforge::llm::{mock::MockServer, Mode, ProviderConfig};
use skillforge::orchestrator::{Runner, SacOverrides, TaskSpec};

fn main() {
    let base = std::env::temp_dir().join(format!("skillforge-rr-{}", std::process::id()));
    let record_dir = base.join("recorded");
    let replay_dir = base.join("replayed");

    // A scripted model served over HTTP, so the record path is the real
    // wire path.
    let server = MockServer::start("happy_path").expect("mock server");
    std::env::set_var("RECORD_REPLAY_DEMO_KEY", "not-a-real-key");

    let task = TaskSpec {
        task: "move forward".into(),
        environment: "pointmass".into(),
        outer_iterations: 2,
        inner_attempts: 3,
        sac: SacOverrides {
            total_steps: Some(3_000),
            warmup_steps: Some(500),
            eval_interval: Some(1_000),
            ..Default::default()
        },
        seed: 5,
    };

    let mut provider = ProviderConfig::stub("unused");
    provider.mode = Mode::Record;
    provider.base_url = Some(server.base_url());
    provider.api_key_env = "RECORD_REPLAY_DEMO_KEY".into();
    let mut runner = Runner::create(&record_dir, task.clone(), provider).expect("fresh dir");
    let state = runner.run().expect("recorded run");
    println!("recorded run status: {:?}", state.status);

    let cassette = record_dir.join("cassette.jsonl");
    let lines = std::fs::read_to_string(&cassette).unwrap().lines().count();
    println!("cassette holds {lines} request/response pairs");

    // Replay: same task, same seed, answers from the cassette. The server
    // could be gone entirely.
    drop(server);
    let mut provider = ProviderConfig::stub("unused");
    provider.mode = Mode::Replay;
    provider.cassette = Some(cassette);
    let mut runner = Runner::create(&replay_dir, task, provider).expect("fresh dir");
    let state = runner.run().expect("replayed run");
    println!("replayed run status: {:?}", state.status);

    // The deterministic artifacts are byte-identical.
    for rel in [
        "iter_000/reward_program.rdsl",
        "iter_000/eval_program.edsl",
        "iter_000/training_log.csv",
        "iter_000/performance.json",
        "iter_000/pe_verdict.json",
    ] {
        let a = std::fs::read(record_dir.join(rel)).unwrap();
        let b = std::fs::read(replay_dir.join(rel)).unwrap();
        println!(
            "{rel}: {}",
            if a == b { "identical" } else { "DIVERGED" }
        );
    }
}
