//! Step the three bundled environments directly and print their schemas,
//! reset behavior and a few physics facts.
//!
//!     cargo run --example simulate

use skillforge::envs::{self, make_env};
use skillforge::llm::render_schema;

fn main() {
    for name in envs::ENV_NAMES {
        let schema = envs::schema(name).unwrap();
        println!("==== {name} ====\n{}", render_schema(&schema));
    }

    // Terminal velocity of the point mass under a constant full push.
    let mut env = make_env("pointmass").unwrap();
    env.reset(0);
    let mut v = 0.0;
    for _ in 0..200 {
        v = env.step(&[1.0]).unwrap().obs.values()[1];
    }
    println!("pointmass velocity after 10 s of full push: {v:.4} m/s (terminal is 2)");

    // The cart-pole falls on its own.
    let mut env = make_env("cartpole").unwrap();
    env.reset(1);
    let mut steps = 0;
    loop {
        let out = env.step(&[0.0]).unwrap();
        steps += 1;
        if out.terminated {
            println!("uncontrolled cartpole fell after {steps} steps (|theta| > 0.7)");
            break;
        }
        if out.truncated {
            println!("cartpole survived the full episode uncontrolled (unexpected)");
            break;
        }
    }

    // Hopper apex under max thrust.
    let mut env = make_env("hopper1d").unwrap();
    env.reset(0);
    let mut apex: f64 = 0.0;
    loop {
        let out = env.step(&[1.0]).unwrap();
        apex = apex.max(out.obs.values()[0]);
        if out.truncated {
            break;
        }
    }
    println!("hopper1d max-thrust apex: {apex:.4} m");
}
