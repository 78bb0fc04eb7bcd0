//! Deterministic prompt assembly for the four loop stages, plus the
//! response extractors. The system templates are versioned files compiled
//! into the binary so recorded cassette digests stay stable across runs of
//! the same build.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::PerformanceReport;
use crate::envs::EnvSchema;

use super::ChatMessage;

pub const REWARD_SYSTEM: &str = include_str!("../../templates/reward_system.txt");
pub const EVAL_SYSTEM: &str = include_str!("../../templates/eval_system.txt");
pub const REVIEW_SYSTEM: &str = include_str!("../../templates/review_system.txt");
pub const DESCRIBE_SYSTEM: &str = include_str!("../../templates/describe_system.txt");

/// Fence tags the stages expect in responses.
pub const REWARD_TAG: &str = "reward-dsl";
pub const EVAL_TAG: &str = "eval-dsl";
pub const VERDICT_TAG: &str = "verdict";

/// Curated example reward program shown in reward prompts, one per
/// bundled environment.
pub fn example_reward(env_name: &str) -> Option<&'static str> {
    Some(match env_name {
        "pointmass" => include_str!("../../templates/examples/pointmass.rdsl"),
        "cartpole" => include_str!("../../templates/examples/cartpole.rdsl"),
        "hopper1d" => include_str!("../../templates/examples/hopper1d.rdsl"),
        _ => return None,
    })
}

/// Curated example evaluation program shown in metric prompts.
pub fn example_eval(env_name: &str) -> Option<&'static str> {
    Some(match env_name {
        "pointmass" => include_str!("../../templates/examples/pointmass.edsl"),
        "cartpole" => include_str!("../../templates/examples/cartpole.edsl"),
        "hopper1d" => include_str!("../../templates/examples/hopper1d.edsl"),
        _ => return None,
    })
}

/// Combined example pair shown to the reviewer.
pub fn example_pair(env_name: &str) -> Option<String> {
    Some(format!(
        "# example reward program\n{}\n# example evaluation program\n{}",
        example_reward(env_name)?,
        example_eval(env_name)?
    ))
}

/// What the evaluation/review prompts see of a trained agent: a summary,
/// not raw weights.
#[derive(Debug, Clone)]
pub struct TrainingSummary {
    pub environment: String,
    pub total_steps: usize,
    pub final_eval_return: f64,
    pub reward_source: String,
}

impl TrainingSummary {
    fn render(&self) -> String {
        format!(
            "environment: {}\ntraining steps: {}\nfinal mean evaluation return: {}\nreward program it was trained on:\n{}",
            self.environment,
            self.total_steps,
            self.final_eval_return,
            self.reward_source.trim_end()
        )
    }
}

fn sections(parts: &[(&str, &str)]) -> String {
    parts
        .iter()
        .filter(|(_, content)| !content.trim().is_empty())
        .map(|(header, content)| format!("{header}\n{}", content.trim_end()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Prompt asking for a reward program. Empty sections are omitted; repair
/// attempts carry the previous program and its error verbatim.
pub fn build_reward_prompt(
    task: &str,
    env_description: &str,
    example: &str,
    suggestions: &str,
    previous_program: &str,
    previous_error: &str,
) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(REWARD_SYSTEM),
        ChatMessage::user(sections(&[
            ("TASK", task),
            ("ENVIRONMENT", env_description),
            ("EXAMPLE", example),
            ("SUGGESTIONS", suggestions),
            ("PREVIOUS PROGRAM", previous_program),
            ("ERROR", previous_error),
        ])),
    ]
}

/// Prompt asking for an evaluation program.
#[allow(clippy::too_many_arguments)]
pub fn build_eval_prompt(
    task: &str,
    env_description: &str,
    example: &str,
    suggestions: &str,
    training_summary: &TrainingSummary,
    previous_program: &str,
    previous_error: &str,
) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(EVAL_SYSTEM),
        ChatMessage::user(sections(&[
            ("TASK", task),
            ("ENVIRONMENT", env_description),
            ("EXAMPLE", example),
            ("SUGGESTIONS", suggestions),
            ("TRAINING SUMMARY", &training_summary.render()),
            ("PREVIOUS PROGRAM", previous_program),
            ("ERROR", previous_error),
        ])),
    ]
}

/// Prompt asking for a satisfied/unsatisfied verdict over measured metrics.
pub fn build_review_prompt(
    task: &str,
    env_description: &str,
    example: &str,
    reward_source: &str,
    eval_source: &str,
    report: &PerformanceReport,
) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(REVIEW_SYSTEM),
        ChatMessage::user(sections(&[
            ("TASK", task),
            ("ENVIRONMENT", env_description),
            ("EXAMPLE", example),
            ("REWARD PROGRAM", reward_source),
            ("EVAL PROGRAM", eval_source),
            ("PERFORMANCE", &render_report_table(report)),
        ])),
    ]
}

/// Prompt asking for a prose environment explanation.
pub fn build_describe_prompt(schema: &EnvSchema, suggestions: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(DESCRIBE_SYSTEM),
        ChatMessage::user(sections(&[
            ("ENVIRONMENT SCHEMA", &render_schema(schema)),
            ("SUGGESTIONS", suggestions),
        ])),
    ]
}

/// Fixed-width metric table, parseable back by row.
pub fn render_report_table(report: &PerformanceReport) -> String {
    let mut out = format!(
        "{:<28} {:>14} {:>14} {:>10}\n",
        "metric", "mean", "std", "episodes"
    );
    for m in &report.metrics {
        out.push_str(&format!(
            "{:<28} {:>14.6} {:>14.6} {:>10}\n",
            m.name, m.mean, m.std, report.episodes
        ));
    }
    out
}

/// Deterministic plain-text rendering of an environment schema.
pub fn render_schema(schema: &EnvSchema) -> String {
    let mut out = String::new();
    out.push_str(&format!("name: {}\n", schema.name));
    out.push_str(&format!("timestep: {} s\n", schema.dt));
    out.push_str(&format!("max episode steps: {}\n", schema.max_steps));
    out.push_str("observation fields (in order):\n");
    for f in &schema.fields {
        out.push_str(&format!(
            "  {} [{}]: {} (typical range {} to {})\n",
            f.name, f.unit, f.description, f.soft_min, f.soft_max
        ));
    }
    out.push_str(&format!("action components: {}\n", schema.action_dim));
    for i in 0..schema.action_dim {
        out.push_str(&format!(
            "  a{i} in [{}, {}]\n",
            schema.action_low[i], schema.action_high[i]
        ));
    }
    out.push_str(&format!("dynamics: {}\n", schema.dynamics));
    out.push_str(&format!("reset: {}\n", schema.reset));
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("no fenced code block tagged `{0}` in the response")]
    NoBlock(String),
    #[error("fenced code block tagged `{0}` is never closed")]
    Unclosed(String),
}

/// Contents of the first fenced block whose info string equals `tag`.
pub fn extract_code_block(response: &str, tag: &str) -> Result<String, ExtractError> {
    let mut in_block = false;
    let mut content: Vec<&str> = Vec::new();
    for line in response.lines() {
        let trimmed = line.trim();
        if !in_block {
            if let Some(info) = trimmed.strip_prefix("```") {
                if info.trim() == tag {
                    in_block = true;
                }
            }
        } else {
            if trimmed == "```" {
                return Ok(content.join("\n"));
            }
            content.push(line);
        }
    }
    if in_block {
        Err(ExtractError::Unclosed(tag.to_string()))
    } else {
        Err(ExtractError::NoBlock(tag.to_string()))
    }
}

/// Structured review outcome. When `satisfied` is true the loop ignores any
/// suggestion text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub satisfied: bool,
    pub suggestions: String,
}

impl Verdict {
    pub fn effective_suggestions(&self) -> &str {
        if self.satisfied {
            ""
        } else {
            &self.suggestions
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot parse verdict: {0}")]
pub struct VerdictParseError(pub String);

/// Parse the body of a `verdict` block: a case-insensitive `SATISFIED:`
/// header, then optionally `SUGGESTIONS:` and free text.
pub fn parse_verdict(text: &str) -> Result<Verdict, VerdictParseError> {
    let mut lines = text.lines();
    let header = loop {
        match lines.next() {
            Some(line) if line.trim().is_empty() => continue,
            Some(line) => break line.trim().to_string(),
            None => return Err(VerdictParseError("empty verdict".into())),
        }
    };
    let lower = header.to_lowercase();
    let value = lower
        .strip_prefix("satisfied:")
        .ok_or_else(|| VerdictParseError(format!("first line must be `SATISFIED: yes|no`, got `{header}`")))?
        .trim()
        .to_string();
    let satisfied = match value.as_str() {
        "yes" => true,
        "no" => false,
        other => {
            return Err(VerdictParseError(format!(
                "SATISFIED value must be yes or no, got `{other}`"
            )))
        }
    };
    let rest: Vec<&str> = lines.collect();
    const MARKER: &str = "suggestions:";
    let mut suggestions = String::new();
    for (i, line) in rest.iter().enumerate() {
        let trimmed = line.trim();
        let is_marker = trimmed
            .get(..MARKER.len())
            .is_some_and(|head| head.eq_ignore_ascii_case(MARKER));
        if is_marker {
            let mut parts: Vec<String> = Vec::new();
            let first = trimmed[MARKER.len()..].trim();
            if !first.is_empty() {
                parts.push(first.to_string());
            }
            parts.extend(rest[i + 1..].iter().map(|l| l.to_string()));
            suggestions = parts.join("\n").trim().to_string();
            break;
        }
    }
    Ok(Verdict {
        satisfied,
        suggestions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;

    #[test]
    fn reward_prompt_omits_empty_sections() {
        let msgs = build_reward_prompt("go right", "a line world", "reward = 1", "", "", "");
        assert_eq!(msgs.len(), 2);
        let user = &msgs[1].content;
        assert!(user.contains("TASK\ngo right"));
        assert!(user.contains("ENVIRONMENT\na line world"));
        assert!(user.contains("EXAMPLE\nreward = 1"));
        assert!(!user.contains("SUGGESTIONS"));
        assert!(!user.contains("PREVIOUS PROGRAM"));
        assert!(!user.contains("ERROR"));
    }

    #[test]
    fn reward_prompt_quotes_error_verbatim() {
        let err = "unknown identifier at line 1, column 10: unknown identifier `zz`";
        let msgs = build_reward_prompt("t", "e", "x", "", "reward = zz", err);
        assert!(msgs[1].content.contains(&format!("ERROR\n{err}")));
    }

    #[test]
    fn prompts_are_deterministic() {
        let a = build_describe_prompt(&envs::schema("pointmass").unwrap(), "tip");
        let b = build_describe_prompt(&envs::schema("pointmass").unwrap(), "tip");
        assert_eq!(a, b);
    }

    #[test]
    fn extract_first_matching_block() {
        let response = "intro\n```text\nnope\n```\n```reward-dsl\nreward = 1\n```\n```reward-dsl\nreward = 2\n```";
        assert_eq!(
            extract_code_block(response, "reward-dsl").unwrap(),
            "reward = 1"
        );
    }

    #[test]
    fn extract_reports_missing_block() {
        let response = "```text\nreward = 1\n```";
        assert_eq!(
            extract_code_block(response, "reward-dsl"),
            Err(ExtractError::NoBlock("reward-dsl".into()))
        );
    }

    #[test]
    fn extract_reports_unclosed_block() {
        let response = "```reward-dsl\nreward = 1\n";
        assert_eq!(
            extract_code_block(response, "reward-dsl"),
            Err(ExtractError::Unclosed("reward-dsl".into()))
        );
    }

    #[test]
    fn verdict_yes_with_trailing_text() {
        let v = parse_verdict("SATISFIED: yes\nlooks solid").unwrap();
        assert!(v.satisfied);
        assert_eq!(v.effective_suggestions(), "");
    }

    #[test]
    fn verdict_no_with_suggestions() {
        let v = parse_verdict("SATISFIED: no\nSUGGESTIONS:\npenalize vertical velocity").unwrap();
        assert!(!v.satisfied);
        assert_eq!(v.suggestions, "penalize vertical velocity");
        let v = parse_verdict("satisfied: NO\nsuggestions: push harder\nand keep centered").unwrap();
        assert_eq!(v.suggestions, "push harder\nand keep centered");
    }

    #[test]
    fn free_text_is_not_a_verdict() {
        assert!(parse_verdict("looks good to me").is_err());
        assert!(parse_verdict("SATISFIED: maybe").is_err());
        assert!(parse_verdict("").is_err());
    }

    #[test]
    fn report_table_is_fixed_width() {
        use crate::dsl::{MetricReport, PerformanceReport};
        let report = PerformanceReport {
            environment: "pointmass".into(),
            checkpoint: "ck".into(),
            episodes: 10,
            metrics: vec![MetricReport {
                name: "final_x".into(),
                per_episode: vec![7.0],
                mean: 7.125,
                std: 0.25,
            }],
        };
        let table = render_report_table(&report);
        assert!(table.contains("final_x"));
        assert!(table.contains("7.125000"));
        assert!(table.contains("10"));
    }
}
