//! Scripted stand-ins for a live model. Each stub is a deterministic
//! function of the request content (never of call order), which keeps
//! resumed and replayed runs consistent.

use super::prompts::{DESCRIBE_SYSTEM, EVAL_SYSTEM, REVIEW_SYSTEM, REWARD_SYSTEM};
use super::{RequestBody, Role};

pub trait ScriptedStub {
    fn respond(&mut self, request: &RequestBody) -> String;
}

/// Names accepted in `stub:<name>` provider modes.
pub fn stub_names() -> &'static [&'static str] {
    &[
        "happy_path",
        "always_unsatisfied",
        "reward_invalid_then_valid",
        "reward_garbage",
        "eval_garbage",
        "describe_empty",
        "verdict_unparseable",
    ]
}

pub fn make_stub(name: &str) -> Option<Box<dyn ScriptedStub + Send>> {
    match name {
        "happy_path" => Some(Box::new(HappyPath)),
        "always_unsatisfied" => Some(Box::new(AlwaysUnsatisfied)),
        "reward_invalid_then_valid" => Some(Box::new(RewardInvalidThenValid)),
        "reward_garbage" => Some(Box::new(RewardGarbage)),
        "eval_garbage" => Some(Box::new(EvalGarbage)),
        "describe_empty" => Some(Box::new(DescribeEmpty)),
        "verdict_unparseable" => Some(Box::new(VerdictUnparseable)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Reward,
    Eval,
    Review,
    Describe,
}

fn stage_of(request: &RequestBody) -> Option<Stage> {
    let system = request
        .messages
        .iter()
        .find(|m| m.role == Role::System)?
        .content
        .as_str();
    if system == REWARD_SYSTEM {
        Some(Stage::Reward)
    } else if system == EVAL_SYSTEM {
        Some(Stage::Eval)
    } else if system == REVIEW_SYSTEM {
        Some(Stage::Review)
    } else if system == DESCRIBE_SYSTEM {
        Some(Stage::Describe)
    } else {
        None
    }
}

fn user_content(request: &RequestBody) -> &str {
    request
        .messages
        .iter()
        .find(|m| m.role == Role::User)
        .map(|m| m.content.as_str())
        .unwrap_or("")
}

const SECTION_HEADERS: [&str; 11] = [
    "TASK",
    "ENVIRONMENT SCHEMA",
    "ENVIRONMENT",
    "EXAMPLE",
    "SUGGESTIONS",
    "TRAINING SUMMARY",
    "PREVIOUS PROGRAM",
    "ERROR",
    "REWARD PROGRAM",
    "EVAL PROGRAM",
    "PERFORMANCE",
];

/// Content of a labeled prompt section: the lines between its header line
/// and the next known header.
fn section(content: &str, header: &str) -> Option<String> {
    let lines: Vec<&str> = content.lines().collect();
    let start = lines.iter().position(|l| *l == header)? + 1;
    let mut end = lines.len();
    for (i, line) in lines.iter().enumerate().skip(start) {
        if SECTION_HEADERS.contains(line) {
            end = i;
            break;
        }
    }
    Some(lines[start..end].join("\n").trim().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TaskKind {
    StandStill,
    Backward,
    Forward,
    Balance,
    Hop,
    Other,
}

fn classify_task(task: &str) -> TaskKind {
    let t = task.to_lowercase();
    if ["still", "stand", "stay", "stop", "halt", "rest"].iter().any(|w| t.contains(w)) {
        TaskKind::StandStill
    } else if ["backward", "backwards", "reverse"].iter().any(|w| t.contains(w)) {
        TaskKind::Backward
    } else if ["forward", "ahead", "right"].iter().any(|w| t.contains(w)) {
        TaskKind::Forward
    } else if ["balance", "upright"].iter().any(|w| t.contains(w)) {
        TaskKind::Balance
    } else if ["hop", "jump", "high"].iter().any(|w| t.contains(w)) {
        TaskKind::Hop
    } else {
        TaskKind::Other
    }
}

fn classify_env(content: &str) -> &'static str {
    for name in ["pointmass", "cartpole", "hopper1d"] {
        if content.contains(name) {
            return name;
        }
    }
    "pointmass"
}

fn fenced(tag: &str, body: &str) -> String {
    format!("```{tag}\n{body}\n```")
}

fn happy_describe(request: &RequestBody) -> String {
    let content = user_content(request);
    let schema = section(content, "ENVIRONMENT SCHEMA").unwrap_or_default();
    format!(
        "Here is what you are controlling, stated from its schema.\n\n{schema}\n\nShape rewards against the listed field names exactly as spelled."
    )
}

fn happy_reward(request: &RequestBody) -> String {
    let content = user_content(request);
    let task = section(content, "TASK").unwrap_or_default();
    let env = classify_env(content);
    let program = match (env, classify_task(&task)) {
        ("pointmass", TaskKind::StandStill) => "reward = -(x^2) - 0.1 * vx^2",
        ("pointmass", TaskKind::Backward) => "reward = -vx",
        ("pointmass", _) => "reward = vx",
        ("cartpole", _) => "let upright = cos(theta)\nreward = upright - 0.1 * x^2 - 0.01 * a0^2",
        ("hopper1d", _) => "reward = z - 0.001 * (a0 + 1)^2",
        _ => "reward = 0",
    };
    format!("A dense shaping works well here.\n\n{}", fenced("reward-dsl", program))
}

fn happy_eval(request: &RequestBody) -> String {
    let content = user_content(request);
    let task = section(content, "TASK").unwrap_or_default();
    let env = classify_env(content);
    let program = match (env, classify_task(&task)) {
        ("pointmass", TaskKind::StandStill) => {
            "metric mean_abs_x = mean(abs(x))\nmetric final_x = final(x)"
        }
        ("pointmass", _) => "metric final_x = final(x)\nmetric mean_vx = mean(vx)",
        ("cartpole", _) => {
            "metric mean_abs_theta = mean(abs(theta))\nmetric steps_upright = sum(if(abs(theta) < 0.7, 1, 0))"
        }
        ("hopper1d", _) => "metric max_z = max(z)\nmetric mean_z = mean(z)",
        _ => "metric final_x = final(x)",
    };
    format!("Measuring the task directly.\n\n{}", fenced("eval-dsl", program))
}

/// Parse `render_report_table` rows back into (name, mean) pairs.
fn parse_table(performance: &str) -> Vec<(String, f64)> {
    performance
        .lines()
        .skip(1)
        .filter_map(|line| {
            let mut parts = line.split_whitespace();
            let name = parts.next()?.to_string();
            let mean: f64 = parts.next()?.parse().ok()?;
            Some((name, mean))
        })
        .collect()
}

fn metric(table: &[(String, f64)], name: &str) -> Option<f64> {
    table.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
}

fn happy_review(request: &RequestBody) -> String {
    let content = user_content(request);
    let task = section(content, "TASK").unwrap_or_default();
    let env = classify_env(content);
    let table = parse_table(&section(content, "PERFORMANCE").unwrap_or_default());
    let (ok, advice) = match (env, classify_task(&task)) {
        ("pointmass", TaskKind::StandStill) => (
            metric(&table, "mean_abs_x").map(|v| v <= 0.2),
            "the body drifts; weight the position penalty more than the velocity penalty and keep both active over the whole episode",
        ),
        ("pointmass", TaskKind::Backward) => (
            metric(&table, "final_x").map(|v| v <= -5.0),
            "it does not travel far enough backward; reward negative velocity directly instead of positions",
        ),
        ("pointmass", _) => (
            metric(&table, "final_x").map(|v| v >= 5.0),
            "it does not travel far enough; reward forward velocity directly instead of positions",
        ),
        ("cartpole", _) => (
            metric(&table, "mean_abs_theta").map(|v| v <= 0.2),
            "the pole still falls; reward cos(theta) and add a small centering term on x",
        ),
        ("hopper1d", _) => (
            metric(&table, "max_z").map(|v| v >= 0.8),
            "it barely leaves the ground; reward height z itself and keep the thrust penalty tiny",
        ),
        _ => (Some(true), ""),
    };
    match ok {
        Some(true) => fenced("verdict", "SATISFIED: yes"),
        _ => fenced(
            "verdict",
            &format!("SATISFIED: no\nSUGGESTIONS:\n{advice}"),
        ),
    }
}

/// Task-aware responses that drive the loop to a satisfied verdict on the
/// desk tasks: curated rewards and metrics, and a review that applies the
/// matching thresholds to the measured table.
struct HappyPath;

impl ScriptedStub for HappyPath {
    fn respond(&mut self, request: &RequestBody) -> String {
        match stage_of(request) {
            Some(Stage::Describe) => happy_describe(request),
            Some(Stage::Reward) => happy_reward(request),
            Some(Stage::Eval) => happy_eval(request),
            Some(Stage::Review) => happy_review(request),
            None => String::new(),
        }
    }
}

/// Happy generators, but the review never accepts. Exercises budget
/// exhaustion and suggestion dataflow.
struct AlwaysUnsatisfied;

impl ScriptedStub for AlwaysUnsatisfied {
    fn respond(&mut self, request: &RequestBody) -> String {
        match stage_of(request) {
            Some(Stage::Review) => fenced(
                "verdict",
                "SATISFIED: no\nSUGGESTIONS:\nreward forward velocity",
            ),
            _ => HappyPath.respond(request),
        }
    }
}

/// First reward attempt references an identifier the schema does not have;
/// once the prompt carries an ERROR section the stub produces the happy
/// program. Content-driven, so replay and resume see identical behavior.
struct RewardInvalidThenValid;

impl ScriptedStub for RewardInvalidThenValid {
    fn respond(&mut self, request: &RequestBody) -> String {
        match stage_of(request) {
            Some(Stage::Reward) => {
                if section(user_content(request), "ERROR").is_some() {
                    happy_reward(request)
                } else {
                    format!(
                        "Using the torso height sensor.\n\n{}",
                        fenced("reward-dsl", "reward = torso_height")
                    )
                }
            }
            _ => HappyPath.respond(request),
        }
    }
}

/// The reward block never parses.
struct RewardGarbage;

impl ScriptedStub for RewardGarbage {
    fn respond(&mut self, request: &RequestBody) -> String {
        match stage_of(request) {
            Some(Stage::Reward) => fenced("reward-dsl", "reward = ((("),
            _ => HappyPath.respond(request),
        }
    }
}

/// The metric program always names an unknown aggregator.
struct EvalGarbage;

impl ScriptedStub for EvalGarbage {
    fn respond(&mut self, request: &RequestBody) -> String {
        match stage_of(request) {
            Some(Stage::Eval) => fenced("eval-dsl", "metric m = median(x)"),
            _ => HappyPath.respond(request),
        }
    }
}

/// Environment explanations come back empty.
struct DescribeEmpty;

impl ScriptedStub for DescribeEmpty {
    fn respond(&mut self, request: &RequestBody) -> String {
        match stage_of(request) {
            Some(Stage::Describe) => String::new(),
            _ => HappyPath.respond(request),
        }
    }
}

/// The verdict block exists but does not follow the header contract.
struct VerdictUnparseable;

impl ScriptedStub for VerdictUnparseable {
    fn respond(&mut self, request: &RequestBody) -> String {
        match stage_of(request) {
            Some(Stage::Review) => fenced("verdict", "looks good to me"),
            _ => HappyPath.respond(request),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_reward, validate_reward};
    use crate::envs;
    use crate::llm::prompts::{build_describe_prompt, build_reward_prompt, extract_code_block};

    fn request(messages: Vec<crate::llm::ChatMessage>) -> RequestBody {
        RequestBody {
            model: "m".into(),
            temperature: 0.0,
            messages,
        }
    }

    #[test]
    fn all_registered_names_construct() {
        for name in stub_names() {
            assert!(make_stub(name).is_some(), "{name}");
        }
        assert!(make_stub("missing").is_none());
    }

    #[test]
    fn happy_reward_programs_validate_per_env() {
        let mut stub = HappyPath;
        for (env, task) in [
            ("pointmass", "stand still at the origin"),
            ("pointmass", "move forward as far as you can"),
            ("pointmass", "move backward"),
            ("cartpole", "balance the pole"),
            ("hopper1d", "jump as high as possible"),
        ] {
            let schema = envs::schema(env).unwrap();
            let desc = format!("name: {env}\nplus prose");
            let req = request(build_reward_prompt(task, &desc, "reward = 0", "", "", ""));
            let response = stub.respond(&req);
            let source = extract_code_block(&response, "reward-dsl").unwrap();
            let program = parse_reward(&source).unwrap();
            validate_reward(&program, &schema).unwrap_or_else(|e| panic!("{env}/{task}: {e}"));
        }
    }

    #[test]
    fn describe_mentions_schema_fields() {
        let mut stub = HappyPath;
        let schema = envs::schema("pointmass").unwrap();
        let req = request(build_describe_prompt(&schema, ""));
        let out = stub.respond(&req);
        assert!(out.contains("pointmass"));
        assert!(out.contains("vx"));
        assert!(!out.contains("```"));
    }

    #[test]
    fn invalid_then_valid_keys_on_error_section() {
        let mut stub = RewardInvalidThenValid;
        let no_err = request(build_reward_prompt("go", "name: pointmass", "x", "", "", ""));
        let first = stub.respond(&no_err);
        assert!(first.contains("torso_height"));
        let with_err = request(build_reward_prompt(
            "go",
            "name: pointmass",
            "x",
            "",
            "reward = torso_height",
            "unknown identifier `torso_height`",
        ));
        let second = stub.respond(&with_err);
        assert!(!second.contains("torso_height"));
        assert!(second.contains("reward-dsl"));
    }

    #[test]
    fn review_applies_thresholds_from_the_table() {
        let mut stub = HappyPath;
        let make_review = |mean_final_x: f64| {
            let table = format!(
                "{:<28} {:>14} {:>14} {:>10}\nfinal_x {:>14.6} {:>14.6} {:>10}\n",
                "metric", "mean", "std", "episodes", mean_final_x, 0.1, 10
            );
            request(vec![
                crate::llm::ChatMessage::system(REVIEW_SYSTEM),
                crate::llm::ChatMessage::user(format!(
                    "TASK\nmove forward\n\nENVIRONMENT\nname: pointmass\n\nPERFORMANCE\n{table}"
                )),
            ])
        };
        let good = stub.respond(&make_review(7.5));
        assert!(good.contains("SATISFIED: yes"));
        let bad = stub.respond(&make_review(1.2));
        assert!(bad.contains("SATISFIED: no"));
        assert!(bad.contains("SUGGESTIONS"));
    }
}
