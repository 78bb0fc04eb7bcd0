//! Command-line front end: `run`, `resume`, `replay`, `inspect`, `bench`,
//! `check`. Exit codes are stable for scripting: 0 satisfied/success,
//! 1 failure, 2 budget exhausted, 64 configuration or usage errors.

mod bench;
mod check;
mod config;
mod inspect;
mod plot;

pub use bench::{
    load_tasks as bench_load_tasks, render_text as bench_render_text, run_bench as bench_run,
    to_csv as bench_to_csv, BenchOptions, BenchRow, BenchSummary, BenchTask,
};
pub use check::{run_checks, CheckOutcome};
pub use config::{ConfigError, RunConfigFile};
pub use plot::line_chart;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::llm::{Mode, ProviderConfig};
use crate::orchestrator::{self, RunState, RunStatus, Runner};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_EXHAUSTED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "skillforge",
    about = "Turn a natural-language task into a trained control policy via LLM-designed rewards",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Start a run from a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Continue an interrupted or failed run at its first incomplete stage.
    Resume {
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Re-execute a recorded run from its cassette and compare artifacts
    /// byte for byte.
    Replay {
        #[arg(long)]
        run_dir: PathBuf,
        /// Where to place the regenerated run (default: <run_dir>/replay).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a run directory and write training-curve SVGs.
    Inspect {
        #[arg(long)]
        run_dir: PathBuf,
        /// Machine-readable JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Run a list of tasks and print an aggregate success table.
    Bench {
        /// JSON array of {task, environment, seed?}.
        #[arg(long)]
        tasks: PathBuf,
        /// Provider mode: live, record, replay or stub:<name>.
        #[arg(long, default_value = "stub:happy_path")]
        provider: String,
        #[arg(long)]
        base_url: Option<String>,
        #[arg(long, default_value = "gpt-4")]
        model: String,
        #[arg(long)]
        out_dir: PathBuf,
        /// Parallel task runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also report first-iteration (no-refinement) success per task.
        #[arg(long)]
        reward_only: bool,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        #[arg(long, default_value_t = 3)]
        attempts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override SAC total environment steps (smoke-testing aid).
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run the fast invariant self-test suite.
    Check {
        #[arg(long)]
        verbose: bool,
        /// Deliberately break a named check (test hook).
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Resume { run_dir } => cmd_resume(&run_dir),
        Command::Replay { run_dir, out } => cmd_replay(&run_dir, out.as_deref()),
        Command::Inspect { run_dir, json } => cmd_inspect(&run_dir, json),
        Command::Bench {
            tasks,
            provider,
            base_url,
            model,
            out_dir,
            jobs,
            reward_only,
            iterations,
            attempts,
            seed,
            steps,
        } => cmd_bench(
            &tasks, &provider, base_url, model, &out_dir, jobs, reward_only, iterations, attempts,
            seed, steps,
        ),
        Command::Check {
            verbose,
            inject_fault,
        } => cmd_check(verbose, inject_fault.as_deref()),
    }
}

fn status_exit(state: &RunState) -> i32 {
    match state.status {
        RunStatus::Satisfied => EXIT_OK,
        RunStatus::Exhausted => EXIT_EXHAUSTED,
        RunStatus::Failed | RunStatus::Running => EXIT_FAILURE,
    }
}

fn print_outcome(state: &RunState, run_dir: &Path) {
    println!("run directory: {}", run_dir.display());
    println!("status: {:?}", state.status);
    if let Some(f) = &state.failure {
        println!("failed stage: {} ({})", f.stage, f.message);
    }
    if let Some(best) = &state.best_checkpoint {
        println!("best checkpoint: {best}");
    }
    println!("iterations: {}", state.iterations.len());
}

fn cmd_run(config_path: &Path) -> i32 {
    let config = match RunConfigFile::load(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let run_dir = config.run_dir.clone();
    if orchestrator::state_path(&run_dir).exists() {
        eprintln!(
            "error: {} already contains a run; use `skillforge resume --run-dir {}`",
            run_dir.display(),
            run_dir.display()
        );
        return EXIT_USAGE;
    }
    if let Err(e) = std::fs::create_dir_all(&run_dir) {
        eprintln!("error: cannot create {}: {e}", run_dir.display());
        return EXIT_FAILURE;
    }
    // Persist the exact config alongside the artifacts; resume and replay
    // read it back.
    let dest = run_dir.join("config.json");
    if config_path != dest {
        if let Err(e) = std::fs::copy(config_path, &dest) {
            eprintln!("error: cannot copy config into run directory: {e}");
            return EXIT_FAILURE;
        }
    }
    let mut runner = match Runner::create(&run_dir, config.task_spec(), config.llm.clone()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    match runner.run() {
        Ok(state) => {
            print_outcome(state, &run_dir);
            status_exit(state)
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn cmd_resume(run_dir: &Path) -> i32 {
    let config_path = run_dir.join("config.json");
    if !config_path.exists() {
        eprintln!("error: {} is not a run directory (no config.json)", run_dir.display());
        return EXIT_USAGE;
    }
    let config = match RunConfigFile::load(&config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut runner = match Runner::resume(run_dir, config.llm.clone()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    match runner.run() {
        Ok(state) => {
            print_outcome(state, run_dir);
            status_exit(state)
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

/// Files compared by replay: everything except the volatile run-level
/// bookkeeping (state timestamps, the config copy, the cassette itself and
/// inspection SVGs).
fn replay_comparable(rel: &Path) -> bool {
    let name = rel.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    if rel.components().count() == 1
        && matches!(name.as_str(), "state.json" | "config.json" | "cassette.jsonl")
    {
        return false;
    }
    if name.ends_with(".svg") {
        return false;
    }
    if rel.components().next().map(|c| c.as_os_str() == "replay").unwrap_or(false) {
        return false;
    }
    true
}

fn collect_files(root: &Path, prefix: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(root.join(prefix))? {
        let entry = entry?;
        let rel = prefix.join(entry.file_name());
        if entry.file_type()?.is_dir() {
            collect_files(root, &rel, out)?;
        } else if replay_comparable(&rel) {
            out.push(rel);
        }
    }
    Ok(())
}

fn cmd_replay(run_dir: &Path, out: Option<&Path>) -> i32 {
    let config_path = run_dir.join("config.json");
    if !config_path.exists() {
        eprintln!("error: {} is not a run directory (no config.json)", run_dir.display());
        return EXIT_USAGE;
    }
    let config = match RunConfigFile::load(&config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cassette = {
        let rel = config
            .llm
            .cassette
            .clone()
            .unwrap_or_else(|| PathBuf::from("cassette.jsonl"));
        if rel.is_absolute() {
            rel
        } else {
            run_dir.join(rel)
        }
    };
    if !cassette.exists() {
        eprintln!(
            "error: no cassette at {}; replay needs a recorded run",
            cassette.display()
        );
        return EXIT_USAGE;
    }
    let replay_dir = out
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| run_dir.join("replay"));
    if replay_dir.exists() {
        if out.is_some() {
            eprintln!("error: {} already exists", replay_dir.display());
            return EXIT_USAGE;
        }
        if let Err(e) = std::fs::remove_dir_all(&replay_dir) {
            eprintln!("error: cannot clear {}: {e}", replay_dir.display());
            return EXIT_FAILURE;
        }
    }

    let mut provider = config.llm.clone();
    provider.mode = Mode::Replay;
    provider.cassette = Some(cassette);
    let mut runner = match Runner::create(&replay_dir, config.task_spec(), provider) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    if let Err(e) = runner.run() {
        eprintln!("error: replay execution failed: {e}");
        return EXIT_FAILURE;
    }

    // Byte-compare the deterministic artifact trees.
    let mut original_files = Vec::new();
    if let Err(e) = collect_files(run_dir, Path::new(""), &mut original_files) {
        eprintln!("error: cannot walk {}: {e}", run_dir.display());
        return EXIT_FAILURE;
    }
    original_files.sort();
    for rel in &original_files {
        let original = std::fs::read(run_dir.join(rel)).unwrap_or_default();
        let replayed = match std::fs::read(replay_dir.join(rel)) {
            Ok(b) => b,
            Err(_) => {
                println!("divergence: {} missing from the replayed run", rel.display());
                return EXIT_FAILURE;
            }
        };
        if original != replayed {
            let offset = original
                .iter()
                .zip(&replayed)
                .position(|(a, b)| a != b)
                .unwrap_or_else(|| original.len().min(replayed.len()));
            println!("divergence: {} at byte {offset}", rel.display());
            return EXIT_FAILURE;
        }
    }
    let mut replay_files = Vec::new();
    let _ = collect_files(&replay_dir, Path::new(""), &mut replay_files);
    replay_files.sort();
    for rel in &replay_files {
        if !original_files.contains(rel) {
            println!("divergence: replay produced extra file {}", rel.display());
            return EXIT_FAILURE;
        }
    }
    println!(
        "replay identical: {} files match ({})",
        original_files.len(),
        replay_dir.display()
    );
    EXIT_OK
}

fn cmd_inspect(run_dir: &Path, json: bool) -> i32 {
    if !orchestrator::state_path(run_dir).exists() {
        eprintln!("error: {} is not a run directory (no state.json)", run_dir.display());
        return EXIT_USAGE;
    }
    let state = match orchestrator::load_state(run_dir) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    match inspect::inspect(run_dir, &state) {
        Ok(report) => {
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                );
            } else {
                print!("{}", inspect::render_text(&report));
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    tasks_path: &Path,
    provider: &str,
    base_url: Option<String>,
    model: String,
    out_dir: &Path,
    jobs: usize,
    reward_only: bool,
    iterations: usize,
    attempts: usize,
    seed: u64,
    steps: Option<usize>,
) -> i32 {
    let tasks = match bench::load_tasks(tasks_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let mode = match Mode::try_from(provider.to_string()) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut provider = ProviderConfig::stub("happy_path");
    provider.mode = mode;
    provider.base_url = base_url;
    provider.model = model;
    let sac = orchestrator::SacOverrides {
        total_steps: steps,
        ..Default::default()
    };
    let options = BenchOptions {
        provider,
        out_dir: out_dir.to_path_buf(),
        jobs,
        iterations,
        attempts,
        seed,
        sac,
        reward_only,
    };
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return EXIT_FAILURE;
    }
    let summary = bench::run_bench(&tasks, &options);
    print!("{}", bench::render_text(&summary, reward_only));
    let csv_path = out_dir.join("bench_summary.csv");
    if let Err(e) = crate::util::write_atomic(&csv_path, bench::to_csv(&summary).as_bytes()) {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return EXIT_FAILURE;
    }
    println!("wrote {}", csv_path.display());
    EXIT_OK
}

fn cmd_check(verbose: bool, inject_fault: Option<&str>) -> i32 {
    let outcomes = run_checks(inject_fault);
    let mut failed = Vec::new();
    for outcome in &outcomes {
        match &outcome.result {
            Ok(()) => {
                if verbose {
                    println!("ok   {}", outcome.name);
                }
            }
            Err(msg) => {
                println!("FAIL {}: {msg}", outcome.name);
                failed.push(outcome.name);
            }
        }
    }
    if failed.is_empty() {
        println!("all {} checks passed", outcomes.len());
        EXIT_OK
    } else {
        println!("{} of {} checks failed: {}", failed.len(), outcomes.len(), failed.join(", "));
        EXIT_FAILURE
    }
}
