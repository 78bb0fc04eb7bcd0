//! The fast invariant self-test behind `skillforge check`: parser
//! round-trips, fuzz safety, validation soundness, gradient fidelity,
//! environment determinism and physics signs, checkpoint round-trips.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::dsl::{self, generator, DslErrorKind, TransitionCtx};
use crate::envs;
use crate::nn::{gradient_check, mlp_backward, mlp_forward, Mat, MlpSpec, ParamStore};
use crate::sac::update;

pub struct CheckOutcome {
    pub name: &'static str,
    pub result: Result<(), String>,
}

/// Run every check. `inject_fault` is a test hook that deliberately breaks
/// the named check so the harness itself can be verified to catch failures.
pub fn run_checks(inject_fault: Option<&str>) -> Vec<CheckOutcome> {
    let fault = inject_fault.unwrap_or("");
    vec![
        CheckOutcome {
            name: "parser_round_trip",
            result: parser_round_trip(),
        },
        CheckOutcome {
            name: "parser_fuzz",
            result: parser_fuzz(),
        },
        CheckOutcome {
            name: "validation_soundness",
            result: validation_soundness(),
        },
        CheckOutcome {
            name: "clip_bounds",
            result: clip_bounds(),
        },
        CheckOutcome {
            name: "gradient_mlp",
            result: gradient_mlp(fault == "gradient"),
        },
        CheckOutcome {
            name: "gradient_sac_losses",
            result: gradient_sac_losses(),
        },
        CheckOutcome {
            name: "env_determinism",
            result: env_determinism(),
        },
        CheckOutcome {
            name: "env_physics",
            result: env_physics(),
        },
        CheckOutcome {
            name: "checkpoint_round_trip",
            result: checkpoint_round_trip(),
        },
    ]
}

fn parser_round_trip() -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    let schema = envs::schema("cartpole").map_err(|e| e.to_string())?;
    for i in 0..500 {
        let p = generator::random_reward_program(&mut rng, &schema);
        let printed = dsl::print_reward(&p);
        let reparsed =
            dsl::parse_reward(&printed).map_err(|e| format!("case {i}: reparse failed: {e}"))?;
        if !p.same_shape(&reparsed) {
            return Err(format!("case {i}: round-trip changed the AST:\n{printed}"));
        }
    }
    Ok(())
}

fn parser_fuzz() -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(102);
    for _ in 0..3_000 {
        let input = generator::random_fuzz_input(&mut rng, 300);
        let _ = dsl::parse_reward(&input);
        let _ = dsl::parse_eval(&input);
    }
    Ok(())
}

fn validation_soundness() -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(103);
    let schema = envs::schema("hopper1d").map_err(|e| e.to_string())?;
    for i in 0..500 {
        let p = generator::random_reward_program(&mut rng, &schema);
        dsl::validate_reward(&p, &schema).map_err(|e| format!("case {i}: {e}"))?;
        let (prev, next, action) = generator::random_context_values(&mut rng, &schema);
        let ctx = TransitionCtx {
            schema: &schema,
            prev: &prev,
            next: &next,
            action: &action,
            t: rng.random_range(0..300),
        };
        if let Err(e) = dsl::eval_reward(&p, &ctx) {
            if matches!(e.kind, DslErrorKind::UnknownIdentifier | DslErrorKind::TypeError) {
                return Err(format!("case {i}: validated program raised {e}"));
            }
        }
    }
    Ok(())
}

fn clip_bounds() -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(104);
    let schema = envs::schema("pointmass").map_err(|e| e.to_string())?;
    let program = dsl::parse_reward("reward = clip(x, prev_x, prev_vx)").map_err(|e| e.to_string())?;
    for _ in 0..2_000 {
        let x: f64 = rng.random_range(-1e6..1e6);
        let mut lo: f64 = rng.random_range(-1e3..1e3);
        let mut hi: f64 = rng.random_range(-1e3..1e3);
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        let prev = [lo, hi];
        let next = [x, 0.0];
        let ctx = TransitionCtx {
            schema: &schema,
            prev: &prev,
            next: &next,
            action: &[0.0],
            t: 0,
        };
        let v = dsl::eval_reward(&program, &ctx).map_err(|e| e.to_string())?;
        if v < lo || v > hi {
            return Err(format!("clip({x}, {lo}, {hi}) = {v} escaped its bounds"));
        }
    }
    Ok(())
}

fn gradient_mlp(inject_fault: bool) -> Result<(), String> {
    let spec = MlpSpec::new(4, vec![16, 16], 3);
    let mut rng = ChaCha12Rng::seed_from_u64(105);
    let params = ParamStore::init(&spec, &mut rng);
    let input = Mat::from_vec(
        5,
        4,
        (0..20).map(|i| ((i * 7) as f64 * 0.31).sin()).collect(),
    );
    let loss = |flat: &[f64]| -> (f64, Vec<f64>) {
        let p = ParamStore::from_flat(&spec, flat.to_vec()).expect("shape");
        let (out, cache) = mlp_forward(&spec, &p, &input).expect("forward");
        let n = out.data.len() as f64;
        let mut loss = 0.0;
        let mut grad_out = Mat::zeros(out.rows, out.cols);
        for i in 0..out.data.len() {
            loss += out.data[i] * out.data[i] / n;
            grad_out.data[i] = 2.0 * out.data[i] / n;
        }
        let (grads, _) = mlp_backward(&spec, &p, &cache, &grad_out).expect("backward");
        let mut flat_grads = grads.as_flat().to_vec();
        if inject_fault {
            flat_grads[0] += 0.01;
        }
        (loss, flat_grads)
    };
    let err = gradient_check(loss, params.as_flat());
    if err > 1e-4 {
        return Err(format!("max relative error {err:.3e} exceeds 1e-4"));
    }
    Ok(())
}

fn gradient_sac_losses() -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(106);
    let (obs_dim, k, rows) = (3, 1, 8);
    let policy_spec = MlpSpec::new(obs_dim, vec![12], 2 * k);
    let critic_spec = MlpSpec::new(obs_dim + k, vec![12], 1);
    let policy = ParamStore::init(&policy_spec, &mut rng);
    let critic1 = ParamStore::init(&critic_spec, &mut rng);
    let critic2 = ParamStore::init(&critic_spec, &mut rng);
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
    let targets: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
    let obs_actions = update::concat_obs_actions(&obs, &actions);

    let err = gradient_check(
        |flat| {
            let c = ParamStore::from_flat(&critic_spec, flat.to_vec()).expect("shape");
            let (loss, grads) =
                update::critic_loss_grad(&critic_spec, &c, &obs_actions, &targets).expect("loss");
            (loss, grads.as_flat().to_vec())
        },
        critic1.as_flat(),
    );
    if err > 1e-4 {
        return Err(format!("critic loss: max relative error {err:.3e}"));
    }

    let eps = Mat::from_vec(rows, k, (0..rows * k).map(|_| rng.random_range(-1.5..1.5)).collect());
    let err = gradient_check(
        |flat| {
            let p = ParamStore::from_flat(&policy_spec, flat.to_vec()).expect("shape");
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
            .expect("loss");
            (loss, grads.as_flat().to_vec())
        },
        policy.as_flat(),
    );
    if err > 1e-4 {
        return Err(format!("policy loss: max relative error {err:.3e}"));
    }

    let log_probs: Vec<f64> = (0..rows).map(|_| rng.random_range(-3.0..1.0)).collect();
    let err = gradient_check(
        |x| {
            let (loss, grad) = update::temperature_loss_grad(x[0], &log_probs, -1.0);
            (loss, vec![grad])
        },
        &[-0.5],
    );
    if err > 1e-4 {
        return Err(format!("temperature loss: max relative error {err:.3e}"));
    }
    Ok(())
}

fn env_determinism() -> Result<(), String> {
    for name in envs::ENV_NAMES {
        let run = || -> Vec<Vec<f64>> {
            let mut env = envs::make_env(name).expect("known env");
            let mut obs = env.reset(77);
            let mut tape = vec![obs.values().to_vec()];
            let mut rng = ChaCha12Rng::seed_from_u64(78);
            for _ in 0..50 {
                let a: Vec<f64> = (0..env.schema().action_dim)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                match env.step(&a) {
                    Ok(out) => {
                        obs = out.obs;
                        tape.push(obs.values().to_vec());
                        if out.terminated || out.truncated {
                            break;
                        }
                    }
                    Err(e) => panic!("{name}: {e}"),
                }
            }
            tape
        };
        if run() != run() {
            return Err(format!("{name}: identical seeds diverged"));
        }
    }
    Ok(())
}

fn env_physics() -> Result<(), String> {
    // Pointmass friction strictly shrinks |vx| when coasting.
    {
        let mut env = envs::make_env("pointmass").expect("env");
        env.reset(0);
        let mut prev = f64::INFINITY;
        for _ in 0..30 {
            let out = env.step(&[0.0]).map_err(|e| e.to_string())?;
            let v = out.obs.values()[1].abs();
            let _ = prev;
            prev = v;
        }
        // Re-run with an initial push to get nonzero speed.
        let mut env = envs::make_env("pointmass").expect("env");
        env.reset(0);
        for _ in 0..20 {
            env.step(&[1.0]).map_err(|e| e.to_string())?;
        }
        let mut last = f64::INFINITY;
        for _ in 0..20 {
            let out = env.step(&[0.0]).map_err(|e| e.to_string())?;
            let v = out.obs.values()[1].abs();
            if v >= last {
                return Err(format!("pointmass |vx| did not decay: {v} >= {last}"));
            }
            last = v;
        }
    }
    // Cartpole tilts away from a perturbed upright without control.
    {
        let mut env = envs::make_env("cartpole").expect("env");
        env.reset(3);
        let theta0 = {
            let out = env.step(&[0.0]).map_err(|e| e.to_string())?;
            out.obs.values()[2]
        };
        let mut theta = theta0;
        for _ in 0..30 {
            let out = env.step(&[0.0]).map_err(|e| e.to_string())?;
            theta = out.obs.values()[2];
            if out.terminated {
                break;
            }
        }
        if theta.abs() <= theta0.abs() {
            return Err(format!(
                "cartpole tilt did not grow: |{theta}| <= |{theta0}|"
            ));
        }
    }
    // Hopper never goes below ground under random thrust.
    {
        let mut env = envs::make_env("hopper1d").expect("env");
        env.reset(9);
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for _ in 0..300 {
            let out = env
                .step(&[rng.random_range(-1.0..1.0)])
                .map_err(|e| e.to_string())?;
            if out.obs.values()[0] < 0.0 {
                return Err("hopper1d went below ground".into());
            }
            if out.truncated {
                break;
            }
        }
    }
    Ok(())
}

fn checkpoint_round_trip() -> Result<(), String> {
    use crate::sac::PolicyCheckpoint;
    let mut rng = ChaCha12Rng::seed_from_u64(107);
    let policy_spec = MlpSpec::new(2, vec![8], 2);
    let critic_spec = MlpSpec::new(3, vec![8], 1);
    let ckpt = PolicyCheckpoint {
        environment: "pointmass".into(),
        reward_program_sha256: "selftest".into(),
        train_steps: 1,
        log_alpha: -1.0,
        action_low: vec![-1.0],
        action_high: vec![1.0],
        policy: ParamStore::init(&policy_spec, &mut rng),
        critic1: ParamStore::init(&critic_spec, &mut rng),
        critic2: ParamStore::init(&critic_spec, &mut rng),
        target1: ParamStore::init(&critic_spec, &mut rng),
        target2: ParamStore::init(&critic_spec, &mut rng),
        policy_spec,
        critic_spec,
    };
    let dir = std::env::temp_dir().join(format!("skillforge-check-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let path = dir.join("checkpoint.json");
    ckpt.save(&path).map_err(|e| e.to_string())?;
    let loaded = PolicyCheckpoint::load(&path).map_err(|e| e.to_string())?;
    let _ = std::fs::remove_dir_all(&dir);
    for obs in [[0.1, -0.4], [2.0, 0.0]] {
        let a = ckpt.act(&obs, true, None).map_err(|e| e.to_string())?;
        let b = loaded.act(&obs, true, None).map_err(|e| e.to_string())?;
        if a != b {
            return Err("reloaded checkpoint acted differently".into());
        }
    }
    Ok(())
}
