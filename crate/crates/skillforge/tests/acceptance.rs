//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Expected values come from independent oracles computed
//! in the test (constant-action simulations, finite differences,
//! random-policy baselines), never from the implementation under test.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use skillforge::dsl::{self, generator, DslErrorKind, TransitionCtx};
use skillforge::envs::{self, make_env, rollout, ConstantPolicy, RandomPolicy};
use skillforge::llm::{mock::MockServer, ProviderConfig};
use skillforge::nn::{gradient_check, Mat, MlpSpec, ParamStore};
use skillforge::orchestrator::{
    self, stages, Runner, RunStatus, SacOverrides, StageFailure, TaskSpec,
};
use skillforge::sac::{self, update, CheckpointPolicy, SacConfig};

struct Criterion(&'static str);

impl Criterion {
    fn pass(self) {
        println!("PASS {}", self.0);
    }
}

impl Drop for Criterion {
    fn drop(&mut self) {
        if std::thread::panicking() {
            println!("FAIL {}", self.0);
        }
    }
}

fn unique_dir(label: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "skillforge-accept-{label}-{}",
        std::process::id()
    ));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

// -------------------------------------------------------------------------
// 1. Gradient fidelity: critic/policy/temperature losses vs central finite
//    differences for every network shape SAC uses, <= 1e-4 relative error.
// -------------------------------------------------------------------------
#[test]
fn criterion_1_gradient_fidelity() {
    let c = Criterion("criterion 1: gradient fidelity (critic/policy/temperature vs finite differences)");
    let tol = 1e-4;
    for (env_idx, env_name) in envs::ENV_NAMES.iter().enumerate() {
        let schema = envs::schema(env_name).unwrap();
        let obs_dim = schema.fields.len();
        let k = schema.action_dim;
        // The exact hidden shape the trainer builds for this environment.
        let config = SacConfig::for_env(env_name).unwrap();
        let policy_spec = MlpSpec::new(obs_dim, config.hidden.clone(), 2 * k);
        let critic_spec = MlpSpec::new(obs_dim + k, config.hidden.clone(), 1);

        let mut rng = ChaCha12Rng::seed_from_u64(900 + env_idx as u64);
        let policy = ParamStore::init(&policy_spec, &mut rng);
        let critic1 = ParamStore::init(&critic_spec, &mut rng);
        let critic2 = ParamStore::init(&critic_spec, &mut rng);
        let rows = 8;
        let obs = Mat::from_vec(
            rows,
            obs_dim,
            (0..rows * obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let actions = Mat::from_vec(
            rows,
            k,
            (0..rows * k).map(|_| rng.random_range(-0.9..0.9)).collect(),
        );
        let targets: Vec<f64> = (0..rows).map(|_| rng.random_range(-2.0..2.0)).collect();
        let obs_actions = update::concat_obs_actions(&obs, &actions);

        let err = gradient_check(
            |flat| {
                let cscan = ParamStore::from_flat(&critic_spec, flat.to_vec()).unwrap();
                let (loss, grads) =
                    update::critic_loss_grad(&critic_spec, &cscan, &obs_actions, &targets).unwrap();
                (loss, grads.as_flat().to_vec())
            },
            critic1.as_flat(),
        );
        assert!(err <= tol, "{env_name} critic loss: relative error {err:.3e}");

        let eps = Mat::from_vec(
            rows,
            k,
            (0..rows * k).map(|_| rng.random_range(-1.5..1.5)).collect(),
        );
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
        assert!(err <= tol, "{env_name} policy loss: relative error {err:.3e}");

        let log_probs: Vec<f64> = (0..rows).map(|_| rng.random_range(-3.0..0.5)).collect();
        let err = gradient_check(
            |x| {
                let (loss, grad) =
                    update::temperature_loss_grad(x[0], &log_probs, config.target_entropy);
                (loss, vec![grad])
            },
            &[-0.7],
        );
        assert!(err <= tol, "{env_name} temperature loss: relative error {err:.3e}");
    }
    c.pass();
}

// -------------------------------------------------------------------------
// 2. Learning sanity: scripted reward "vx" on pointmass reaches mean final
//    x >= 5.0 over 10 deterministic episodes within 30k steps; the
//    constant-max-action oracle (~16 m) is computed first.
// -------------------------------------------------------------------------
#[test]
fn criterion_2_learning_sanity_forward() {
    let c = Criterion("criterion 2: learning sanity (pointmass forward, scripted reward)");
    let program = dsl::parse_reward("reward = vx").unwrap();

    // Oracle first: independent recurrence for the constant-max-action
    // upper bound, cross-checked against an env rollout.
    let mut env = make_env("pointmass").unwrap();
    let x0 = env.reset(0).values()[0];
    let (mut x, mut vx) = (x0, 0.0);
    for _ in 0..200 {
        vx += 0.05 * (1.0 - 0.5 * vx);
        x += 0.05 * vx;
    }
    let oracle_upper = x;
    assert!(
        (15.5..16.5).contains(&oracle_upper),
        "constant-action oracle should be ~16 m, got {oracle_upper}"
    );
    let mut push = ConstantPolicy(vec![1.0]);
    let oracle_rollout = rollout(env.as_mut(), &mut push, &program, 1, 0).unwrap();
    let env_final = oracle_rollout[0].steps.last().unwrap().next.values()[0];
    assert!(
        (env_final - oracle_upper).abs() < 1e-9,
        "env disagrees with the oracle recurrence: {env_final} vs {oracle_upper}"
    );

    let config = SacConfig::for_env("pointmass").unwrap();
    assert_eq!(config.total_steps, 30_000);
    let (checkpoint, _log) = sac::train("pointmass", &program, &config).unwrap();

    let mut env = make_env("pointmass").unwrap();
    let mut policy = CheckpointPolicy {
        checkpoint: &checkpoint,
    };
    let trajs = rollout(env.as_mut(), &mut policy, &program, 10, 90_000).unwrap();
    let mean_final_x: f64 = trajs
        .iter()
        .map(|t| t.steps.last().unwrap().next.values()[0])
        .sum::<f64>()
        / trajs.len() as f64;
    println!(
        "  trained mean final x = {mean_final_x:.2} m (threshold 5.0, oracle {oracle_upper:.2})"
    );
    assert!(
        mean_final_x >= 5.0,
        "trained policy reached only {mean_final_x:.2} m"
    );
    c.pass();
}

// -------------------------------------------------------------------------
// 3. Desk-scale task triad: the full loop with the curated scripted model
//    reaches SATISFIED within <= 2 outer iterations on stand-still,
//    forward and backward, beating random baselines by >= 5x.
// -------------------------------------------------------------------------
#[test]
fn criterion_3_desk_triad_full_loop() {
    let c = Criterion("criterion 3: desk triad (stand still / forward / backward) via the full loop");

    // Random-policy baselines measured first.
    let probe = dsl::parse_reward("reward = 0").unwrap();
    let mut env = make_env("pointmass").unwrap();
    let mut random = RandomPolicy::new(vec![-1.0], vec![1.0], 4242);
    let baseline = rollout(env.as_mut(), &mut random, &probe, 10, 50_000).unwrap();
    let baseline_mean_abs_x = {
        let (mut total, mut n) = (0.0, 0usize);
        for t in &baseline {
            for s in &t.steps {
                total += s.next.values()[0].abs();
                n += 1;
            }
        }
        total / n as f64
    };
    let baseline_final_x = baseline
        .iter()
        .map(|t| t.steps.last().unwrap().next.values()[0])
        .sum::<f64>()
        / baseline.len() as f64;
    println!(
        "  baselines: mean|x| = {baseline_mean_abs_x:.4}, final x = {baseline_final_x:.4}"
    );

    struct Task {
        text: &'static str,
        metric: &'static str,
        seed: u64,
        check: Box<dyn Fn(f64) -> (bool, String)>,
    }
    let tasks = vec![
        Task {
            text: "stand still at the origin",
            metric: "mean_abs_x",
            seed: 11,
            check: {
                let bound = (baseline_mean_abs_x / 5.0).min(0.2);
                Box::new(move |v| {
                    (
                        v <= bound,
                        format!("mean|x| = {v:.4} must be <= {bound:.4} (5x better than random and <= 0.2)"),
                    )
                })
            },
        },
        Task {
            text: "move forward as far as possible",
            metric: "final_x",
            seed: 12,
            check: {
                let bound = 5.0_f64.max(5.0 * baseline_final_x.abs());
                Box::new(move |v| (v >= bound, format!("final x = {v:.2} must be >= {bound:.2}")))
            },
        },
        Task {
            text: "move backward as far as possible",
            metric: "final_x",
            seed: 13,
            check: {
                let bound = (-5.0_f64).min(-5.0 * baseline_final_x.abs());
                Box::new(move |v| (v <= bound, format!("final x = {v:.2} must be <= {bound:.2}")))
            },
        },
    ];

    for task in tasks {
        let run_dir = unique_dir(&format!("triad-{}", task.seed));
        let spec = TaskSpec {
            task: task.text.into(),
            environment: "pointmass".into(),
            outer_iterations: 2,
            inner_attempts: 3,
            sac: SacOverrides::default(),
            seed: task.seed,
        };
        let mut runner =
            Runner::create(&run_dir, spec, ProviderConfig::stub("happy_path")).unwrap();
        let state = runner.run().unwrap().clone();
        assert_eq!(
            state.status,
            RunStatus::Satisfied,
            "{}: loop did not satisfy within 2 iterations ({:?})",
            task.text,
            state.failure
        );
        assert!(state.iterations.len() <= 2);

        let last = state.iterations.last().unwrap();
        let report: dsl::PerformanceReport = serde_json::from_str(
            &std::fs::read_to_string(run_dir.join(last.performance.as_ref().unwrap())).unwrap(),
        )
        .unwrap();
        let measured = report
            .metrics
            .iter()
            .find(|m| m.name == task.metric)
            .unwrap_or_else(|| panic!("{}: report lacks {}", task.text, task.metric))
            .mean;
        let (ok, detail) = (task.check)(measured);
        println!("  {}: {detail} [{}]", task.text, if ok { "ok" } else { "FAIL" });
        assert!(ok, "{}: {detail}", task.text);
        let _ = std::fs::remove_dir_all(&run_dir);
    }
    c.pass();
}

// -------------------------------------------------------------------------
// 4. Repair protocol: invalid-then-valid yields success with exactly two
//    attempts and verbatim error feedback; garbage exhausts with N records.
// -------------------------------------------------------------------------
#[test]
fn criterion_4_repair_protocol() {
    let c = Criterion("criterion 4: reward repair protocol (error feedback, budget exhaustion)");
    let schema = envs::schema("pointmass").unwrap();
    let n = 3;

    let mut llm =
        skillforge::llm::LlmClient::new(ProviderConfig::stub("reward_invalid_then_valid")).unwrap();
    let result = stages::generate_reward_program(
        "move forward",
        "name: pointmass",
        &schema,
        "reward = 0",
        "",
        &mut llm,
        n,
        "",
        "",
    )
    .expect("second attempt succeeds");
    assert_eq!(result.attempts.len(), 2, "expected exactly 2 attempts");
    let first_error = result.attempts[0].error.clone().expect("first attempt fails");
    assert!(first_error.contains("unknown identifier"));
    assert!(first_error.contains("torso_height"));
    let second_prompt = orchestrator::attempt_user_content(&result.attempts[1]);
    assert!(
        second_prompt.contains(&format!("ERROR\n{first_error}")),
        "attempt 2 must quote attempt 1's error verbatim; prompt was:\n{second_prompt}"
    );

    let mut llm = skillforge::llm::LlmClient::new(ProviderConfig::stub("reward_garbage")).unwrap();
    match stages::generate_reward_program(
        "move forward",
        "name: pointmass",
        &schema,
        "reward = 0",
        "",
        &mut llm,
        n,
        "",
        "",
    ) {
        Err(StageFailure::Exhausted { attempts, .. }) => {
            assert_eq!(attempts.len(), n, "exhaustion must record all N attempts");
            assert!(attempts.iter().all(|a| a.error.is_some()));
        }
        other => panic!("expected exhaustion, got {:?}", other.map(|r| r.attempts.len())),
    }
    assert_eq!(llm.calls(), n as u64);
    c.pass();
}

// -------------------------------------------------------------------------
// 5. Replay determinism: a run recorded over HTTP replays from its cassette
//    byte-identically (cmd_replay exits 0), and no secret reaches disk.
// -------------------------------------------------------------------------
#[test]
fn criterion_5_replay_determinism() {
    let c = Criterion("criterion 5: replay determinism (recorded run replays byte-identically)");
    let run_dir = unique_dir("replay");
    std::fs::create_dir_all(&run_dir).unwrap();

    let server = MockServer::start("happy_path").unwrap();
    let secret = "hunter2-super-secret-key";
    std::env::set_var("SKILLFORGE_ACCEPT_KEY", secret);

    // Write the config file and drive the real CLI binary.
    let config = serde_json::json!({
        "task": "move forward as far as possible",
        "environment": "pointmass",
        "iterations": 2,
        "attempts": 3,
        "seed": 21,
        "run_dir": run_dir.to_string_lossy(),
        "sac": { "total_steps": 3000, "warmup_steps": 500, "eval_interval": 1000 },
        "llm": {
            "mode": "record",
            "base_url": server.base_url(),
            "api_key_env": "SKILLFORGE_ACCEPT_KEY"
        }
    });
    let config_path = run_dir.with_extension("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let bin = env!("CARGO_BIN_EXE_skillforge");
    let out = std::process::Command::new(bin)
        .args(["run", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "recorded run failed:\n{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(run_dir.join("cassette.jsonl").exists());

    // Secrets hygiene: the key value appears nowhere in the run directory.
    let mut stack = vec![run_dir.clone()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let entry = entry.unwrap();
            if entry.file_type().unwrap().is_dir() {
                stack.push(entry.path());
            } else {
                let bytes = std::fs::read(entry.path()).unwrap();
                assert!(
                    !bytes
                        .windows(secret.len())
                        .any(|w| w == secret.as_bytes()),
                    "API key leaked into {}",
                    entry.path().display()
                );
            }
        }
    }

    // The server is gone; replay must still reproduce everything.
    drop(server);
    let out = std::process::Command::new(bin)
        .args(["replay", "--run-dir"])
        .arg(&run_dir)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "replay diverged:\n{stdout}{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.contains("replay identical"), "{stdout}");

    // Tampering with a persisted artifact must be detected, with a path.
    let reward_file = run_dir.join("iter_000/reward_program.rdsl");
    let original = std::fs::read_to_string(&reward_file).unwrap();
    std::fs::write(&reward_file, original.replace("vx", "x")).unwrap();
    let out = std::process::Command::new(bin)
        .args(["replay", "--run-dir"])
        .arg(&run_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "tampered replay must fail");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("reward_program.rdsl") && stdout.contains("byte"),
        "divergence report must name the file and offset: {stdout}"
    );
    let _ = std::fs::remove_dir_all(&run_dir);
    let _ = std::fs::remove_file(&config_path);
    c.pass();
}

// -------------------------------------------------------------------------
// 6. Parser suite: >= 10k AST round-trips, >= 100k fuzz inputs without a
//    crash or hang, >= 10k validation-soundness (program, context) pairs.
// -------------------------------------------------------------------------
#[test]
fn criterion_6_parser_suite() {
    let c = Criterion("criterion 6: parser round-trip, fuzz and validation-soundness properties");

    // Round-trip over generated ASTs, all three schemas.
    let mut rng = ChaCha12Rng::seed_from_u64(600);
    let schemas: Vec<_> = envs::ENV_NAMES
        .iter()
        .map(|n| envs::schema(n).unwrap())
        .collect();
    for i in 0..10_000 {
        let schema = &schemas[i % schemas.len()];
        if i % 2 == 0 {
            let p = generator::random_reward_program(&mut rng, schema);
            let printed = dsl::print_reward(&p);
            let reparsed = dsl::parse_reward(&printed)
                .unwrap_or_else(|e| panic!("case {i}: canonical text failed to parse: {e}\n{printed}"));
            assert!(p.same_shape(&reparsed), "case {i}: round trip changed AST\n{printed}");
        } else {
            let p = generator::random_eval_program(&mut rng, schema);
            let printed = dsl::print_eval(&p);
            let reparsed = dsl::parse_eval(&printed)
                .unwrap_or_else(|e| panic!("case {i}: canonical text failed to parse: {e}\n{printed}"));
            assert!(p.same_shape(&reparsed), "case {i}: round trip changed AST\n{printed}");
        }
    }

    // Fuzz: arbitrary inputs only ever return ok or an error. Mostly short
    // inputs for breadth, with a steady stream of 64 KiB pathological ones
    // (deep nesting, unary chains, huge literals) for depth.
    let mut rng = ChaCha12Rng::seed_from_u64(601);
    for i in 0..100_000 {
        let max_len = if i % 500 == 0 { 64 * 1024 } else { 256 };
        let input = generator::random_fuzz_input(&mut rng, max_len);
        let _ = dsl::parse_reward(&input);
        let _ = dsl::parse_eval(&input);
    }

    // Soundness: validated programs never raise unknown-identifier or type
    // errors at evaluation time, on any conforming context.
    let mut rng = ChaCha12Rng::seed_from_u64(602);
    for i in 0..10_000 {
        let schema = &schemas[i % schemas.len()];
        let p = generator::random_reward_program(&mut rng, schema);
        dsl::validate_reward(&p, schema).unwrap_or_else(|e| panic!("case {i}: {e}"));
        let (prev, next, action) = generator::random_context_values(&mut rng, schema);
        let ctx = TransitionCtx {
            schema,
            prev: &prev,
            next: &next,
            action: &action,
            t: rng.random_range(0..500),
        };
        if let Err(e) = dsl::eval_reward(&p, &ctx) {
            assert!(
                !matches!(e.kind, DslErrorKind::UnknownIdentifier | DslErrorKind::TypeError),
                "case {i}: validated program raised {e} on a conforming context"
            );
        }
    }
    c.pass();
}

// -------------------------------------------------------------------------
// 7. Environment physics: friction decay, cart-pole instability, hopper
//    ground clamp, and the max-thrust apex within 5% of an independent
//    constant-action simulation.
// -------------------------------------------------------------------------
#[test]
fn criterion_7_environment_physics() {
    let c = Criterion("criterion 7: environment physics checks");

    // Pointmass friction: coasting speed magnitude strictly decreases.
    let mut env = make_env("pointmass").unwrap();
    env.reset(1);
    for _ in 0..40 {
        env.step(&[1.0]).unwrap();
    }
    let mut last = f64::INFINITY;
    for _ in 0..40 {
        let v = env.step(&[0.0]).unwrap().obs.values()[1].abs();
        assert!(v < last, "pointmass |vx| did not strictly decay");
        last = v;
    }

    // Cartpole: a tilt grows under zero force within one step.
    let mut env = make_env("cartpole").unwrap();
    env.reset(2);
    let theta0 = env.step(&[0.0]).unwrap().obs.values()[2];
    let theta1 = env.step(&[0.0]).unwrap().obs.values()[2];
    assert!(
        theta1.abs() > theta0.abs(),
        "cartpole tilt must grow: {theta0} -> {theta1}"
    );

    // Hopper: never below ground under adversarially random thrust.
    let mut env = make_env("hopper1d").unwrap();
    env.reset(3);
    let mut rng = ChaCha12Rng::seed_from_u64(700);
    loop {
        let out = env.step(&[rng.random_range(-1.0..1.0)]).unwrap();
        assert!(out.obs.values()[0] >= 0.0, "hopper z went negative");
        if out.truncated {
            break;
        }
    }

    // Hopper apex: env rollout vs an independent constant-action
    // simulation of the documented update rule, within 5%.
    let mut env = make_env("hopper1d").unwrap();
    let z0 = env.reset(4).values()[0];
    let (mut z, mut vz) = (z0, 0.0_f64);
    let mut oracle_apex: f64 = z0;
    for _ in 0..300 {
        let thrust = if z <= 0.5 { 20.0 } else { 0.0 };
        vz += 0.02 * (thrust - 9.81);
        z += 0.02 * vz;
        if z <= 0.0 {
            z = 0.0;
            vz = vz.max(0.0);
        }
        oracle_apex = oracle_apex.max(z);
    }
    let mut apex: f64 = z0;
    loop {
        let out = env.step(&[1.0]).unwrap();
        apex = apex.max(out.obs.values()[0]);
        if out.truncated {
            break;
        }
    }
    println!("  hopper apex: env {apex:.4} vs oracle {oracle_apex:.4}");
    assert!(
        (apex - oracle_apex).abs() <= 0.05 * oracle_apex,
        "apex {apex} deviates more than 5% from oracle {oracle_apex}"
    );
    c.pass();
}

// -------------------------------------------------------------------------
// 8. Budget and dataflow: <= N calls per stage (4N per iteration),
//    iteration-0 prompts carry no SUGGESTIONS section, and iteration-1
//    prompts carry iteration-0's suggestions verbatim.
// -------------------------------------------------------------------------
#[test]
fn criterion_8_budget_and_dataflow() {
    let c = Criterion("criterion 8: per-stage budgets and suggestion dataflow across iterations");
    let run_dir = unique_dir("dataflow");
    let n = 3;
    let spec = TaskSpec {
        task: "move forward".into(),
        environment: "pointmass".into(),
        outer_iterations: 2,
        inner_attempts: n,
        sac: SacOverrides {
            total_steps: Some(1_500),
            warmup_steps: Some(400),
            eval_interval: Some(500),
            hidden: Some(vec![16, 16]),
            ..Default::default()
        },
        seed: 3,
    };
    let mut runner =
        Runner::create(&run_dir, spec, ProviderConfig::stub("always_unsatisfied")).unwrap();
    let state = runner.run().unwrap().clone();
    assert_eq!(state.status, RunStatus::Exhausted);
    assert_eq!(state.iterations.len(), 2);

    let mut calls_total = 0;
    for record in &state.iterations {
        for (stage, attempts) in [
            ("describe", &record.describe_attempts),
            ("reward", &record.reward_attempts),
            ("eval", &record.eval_attempts),
            ("review", &record.review_attempts),
        ] {
            assert!(
                attempts.len() <= n,
                "iteration {} stage {stage} used {} > N = {n} calls",
                record.index,
                attempts.len()
            );
            calls_total += attempts.len();
        }
        let iteration_calls: usize = record.describe_attempts.len()
            + record.reward_attempts.len()
            + record.eval_attempts.len()
            + record.review_attempts.len();
        assert!(iteration_calls <= 4 * n);
    }
    assert_eq!(state.llm_calls as usize, calls_total);

    // Iteration 0: generator prompts contain no SUGGESTIONS section.
    let iter0 = &state.iterations[0];
    for attempts in [
        &iter0.describe_attempts,
        &iter0.reward_attempts,
        &iter0.eval_attempts,
    ] {
        for attempt in attempts.iter() {
            let user = orchestrator::attempt_user_content(attempt);
            assert!(
                !user.contains("SUGGESTIONS\n"),
                "iteration 0 prompt must not have a SUGGESTIONS section:\n{user}"
            );
        }
    }

    // Iteration 1: the previous verdict's suggestions appear verbatim.
    let suggestions = state.iterations[0]
        .verdict
        .as_ref()
        .unwrap()
        .suggestions
        .clone();
    assert_eq!(suggestions, "reward forward velocity");
    let iter1 = &state.iterations[1];
    for attempts in [
        &iter1.describe_attempts,
        &iter1.reward_attempts,
        &iter1.eval_attempts,
    ] {
        for attempt in attempts.iter() {
            let user = orchestrator::attempt_user_content(attempt);
            assert!(
                user.contains(&format!("SUGGESTIONS\n{suggestions}")),
                "iteration 1 prompt must carry iteration 0's suggestions verbatim:\n{user}"
            );
        }
    }
    let _ = std::fs::remove_dir_all(&run_dir);
    c.pass();
}
