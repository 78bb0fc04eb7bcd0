//! Rollout records and their on-disk form: one CSV per episode plus a JSON
//! header tying the files to a schema, seeds and program hashes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EnvSchema, Observation};

/// One transition: the observation before the step, the clamped-input
/// action as supplied, the observation after, the evaluated reward and the
/// episode-end flags.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub prev: Observation,
    pub action: Vec<f64>,
    pub next: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

/// One seeded episode. Non-empty; at most one terminal step, always last.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Sum of per-step rewards.
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// CSV with one row per step: t, prev fields, action components, next
    /// fields, reward, terminated, truncated.
    pub fn to_csv(&self, schema: &EnvSchema) -> String {
        let mut out = String::new();
        out.push('t');
        for f in &schema.fields {
            out.push_str(&format!(",prev_{}", f.name));
        }
        for i in 0..schema.action_dim {
            out.push_str(&format!(",a{i}"));
        }
        for f in &schema.fields {
            out.push_str(&format!(",{}", f.name));
        }
        out.push_str(",reward,terminated,truncated\n");
        for (t, s) in self.steps.iter().enumerate() {
            out.push_str(&t.to_string());
            for v in s.prev.values() {
                out.push_str(&format!(",{v}"));
            }
            for v in &s.action {
                out.push_str(&format!(",{v}"));
            }
            for v in s.next.values() {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{},{},{}\n", s.reward, s.terminated, s.truncated));
        }
        out
    }
}

/// JSON header persisted alongside episode CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub environment: String,
    pub base_seed: u64,
    pub episodes: usize,
    pub reward_program_sha256: String,
}

/// Write `trajectories.json` plus `episode_<e>.csv` files into `dir`.
pub fn save_trajectories(
    dir: &Path,
    trajectories: &[Trajectory],
    schema: &EnvSchema,
    base_seed: u64,
    reward_hash: &str,
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let header = TrajectoryHeader {
        environment: schema.name.clone(),
        base_seed,
        episodes: trajectories.len(),
        reward_program_sha256: reward_hash.to_string(),
    };
    let header_json = serde_json::to_string_pretty(&header).expect("header serializes");
    crate::util::write_atomic(&dir.join("trajectories.json"), header_json.as_bytes())?;
    for (e, traj) in trajectories.iter().enumerate() {
        let csv = traj.to_csv(schema);
        crate::util::write_atomic(&dir.join(format!("episode_{e:02}.csv")), csv.as_bytes())?;
    }
    Ok(())
}
