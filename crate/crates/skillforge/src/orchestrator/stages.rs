//! The four LLM-facing stage protocols. Each loops up to its attempt
//! budget, feeding the previous failure back into the next prompt, and
//! returns every attempt it made for the forensic record.

use thiserror::Error;

use crate::dsl::{
    parse_eval, parse_reward, validate_eval, validate_reward, EvalProgram, PerformanceReport,
    RewardProgram,
};
use crate::envs::EnvSchema;
use crate::llm::{
    build_describe_prompt, build_eval_prompt, build_review_prompt, build_reward_prompt,
    extract_code_block, parse_verdict, prompts, ChatMessage, LlmClient, LlmError, RequestBody,
    TrainingSummary, Verdict,
};

use super::state::StageAttempt;

#[derive(Debug, Error)]
pub enum StageFailure {
    #[error("{stage}: all {} attempts failed; last error: {}", attempts.len(), last_error(attempts))]
    Exhausted {
        stage: &'static str,
        attempts: Vec<StageAttempt>,
    },
    #[error("{stage}: {source}")]
    Llm {
        stage: &'static str,
        source: LlmError,
    },
}

fn last_error(attempts: &[StageAttempt]) -> String {
    attempts
        .last()
        .and_then(|a| a.error.clone())
        .unwrap_or_else(|| "no attempts made".into())
}

pub struct StageResult<T> {
    pub value: T,
    pub attempts: Vec<StageAttempt>,
}

fn digest_of(prompt: &[ChatMessage], llm: &LlmClient) -> String {
    // The digest must match what the client sends on the wire.
    RequestBody {
        model: llm.model().to_string(),
        temperature: llm.temperature(),
        messages: prompt.to_vec(),
    }
    .digest()
}

fn run_attempt(
    llm: &mut LlmClient,
    stage: &'static str,
    prompt: Vec<ChatMessage>,
) -> Result<StageAttempt, StageFailure> {
    let prompt_digest = digest_of(&prompt, llm);
    let response = llm
        .complete(&prompt)
        .map_err(|source| StageFailure::Llm { stage, source })?;
    Ok(StageAttempt {
        prompt,
        prompt_digest,
        response,
        error: None,
    })
}

/// Ask for a prose environment explanation; empty responses are retried up
/// to the budget.
pub fn describe_environment(
    schema: &EnvSchema,
    suggestions: &str,
    llm: &mut LlmClient,
    budget: usize,
) -> Result<StageResult<String>, StageFailure> {
    const STAGE: &str = "describe_environment";
    let mut attempts = Vec::new();
    for _ in 0..budget {
        let prompt = build_describe_prompt(schema, suggestions);
        let mut attempt = run_attempt(llm, STAGE, prompt)?;
        let text = attempt.response.trim().to_string();
        if text.is_empty() {
            attempt.error = Some("empty response".into());
            attempts.push(attempt);
            continue;
        }
        attempts.push(attempt);
        return Ok(StageResult {
            value: text,
            attempts,
        });
    }
    Err(StageFailure::Exhausted {
        stage: STAGE,
        attempts,
    })
}

/// One extract/parse/validate pipeline for reward responses.
fn accept_reward(response: &str, schema: &EnvSchema) -> Result<RewardProgram, (String, String)> {
    let source = extract_code_block(response, prompts::REWARD_TAG)
        .map_err(|e| (String::new(), e.to_string()))?;
    let program = parse_reward(&source).map_err(|e| (source.clone(), e.to_string()))?;
    validate_reward(&program, schema).map_err(|e| (source.clone(), e.to_string()))?;
    Ok(program)
}

/// Generate a reward program with up to `budget` repair attempts. Each
/// failed attempt's program text and single-line error feed the next
/// prompt. `prev_program`/`prev_error` seed the first prompt when
/// re-entering after a runtime failure elsewhere (training).
#[allow(clippy::too_many_arguments)]
pub fn generate_reward_program(
    task: &str,
    env_description: &str,
    schema: &EnvSchema,
    example: &str,
    suggestions: &str,
    llm: &mut LlmClient,
    budget: usize,
    prev_program: &str,
    prev_error: &str,
) -> Result<StageResult<RewardProgram>, StageFailure> {
    const STAGE: &str = "generate_reward_program";
    let mut attempts = Vec::new();
    let mut prev_program = prev_program.to_string();
    let mut prev_error = prev_error.to_string();
    for _ in 0..budget {
        let prompt = build_reward_prompt(
            task,
            env_description,
            example,
            suggestions,
            &prev_program,
            &prev_error,
        );
        let mut attempt = run_attempt(llm, STAGE, prompt)?;
        match accept_reward(&attempt.response, schema) {
            Ok(program) => {
                attempts.push(attempt);
                return Ok(StageResult {
                    value: program,
                    attempts,
                });
            }
            Err((source, error)) => {
                attempt.error = Some(error.clone());
                attempts.push(attempt);
                prev_program = source;
                prev_error = error;
            }
        }
    }
    Err(StageFailure::Exhausted {
        stage: STAGE,
        attempts,
    })
}

fn accept_eval(response: &str, schema: &EnvSchema) -> Result<EvalProgram, (String, String)> {
    let source = extract_code_block(response, prompts::EVAL_TAG)
        .map_err(|e| (String::new(), e.to_string()))?;
    let program = parse_eval(&source).map_err(|e| (source.clone(), e.to_string()))?;
    validate_eval(&program, schema).map_err(|e| (source.clone(), e.to_string()))?;
    Ok(program)
}

/// Generate an evaluation program; the same repair protocol as
/// [`generate_reward_program`], over the metric grammar (at least one
/// metric is enforced by the parser).
#[allow(clippy::too_many_arguments)]
pub fn generate_eval_program(
    task: &str,
    env_description: &str,
    schema: &EnvSchema,
    example: &str,
    suggestions: &str,
    summary: &TrainingSummary,
    llm: &mut LlmClient,
    budget: usize,
    prev_program: &str,
    prev_error: &str,
) -> Result<StageResult<EvalProgram>, StageFailure> {
    const STAGE: &str = "generate_eval_program";
    let mut attempts = Vec::new();
    let mut prev_program = prev_program.to_string();
    let mut prev_error = prev_error.to_string();
    for _ in 0..budget {
        let prompt = build_eval_prompt(
            task,
            env_description,
            example,
            suggestions,
            summary,
            &prev_program,
            &prev_error,
        );
        let mut attempt = run_attempt(llm, STAGE, prompt)?;
        match accept_eval(&attempt.response, schema) {
            Ok(program) => {
                attempts.push(attempt);
                return Ok(StageResult {
                    value: program,
                    attempts,
                });
            }
            Err((source, error)) => {
                attempt.error = Some(error.clone());
                attempts.push(attempt);
                prev_program = source;
                prev_error = error;
            }
        }
    }
    Err(StageFailure::Exhausted {
        stage: STAGE,
        attempts,
    })
}

/// Ask for a verdict over the measured report; unparseable verdicts are
/// retried like any other repairable response.
#[allow(clippy::too_many_arguments)]
pub fn assess_performance(
    task: &str,
    env_description: &str,
    example: &str,
    reward_source: &str,
    eval_source: &str,
    report: &PerformanceReport,
    llm: &mut LlmClient,
    budget: usize,
) -> Result<StageResult<Verdict>, StageFailure> {
    const STAGE: &str = "assess_performance";
    let mut attempts = Vec::new();
    for _ in 0..budget {
        let prompt =
            build_review_prompt(task, env_description, example, reward_source, eval_source, report);
        let mut attempt = run_attempt(llm, STAGE, prompt)?;
        let outcome = extract_code_block(&attempt.response, prompts::VERDICT_TAG)
            .map_err(|e| e.to_string())
            .and_then(|text| parse_verdict(&text).map_err(|e| e.to_string()));
        match outcome {
            Ok(verdict) => {
                attempts.push(attempt);
                return Ok(StageResult {
                    value: verdict,
                    attempts,
                });
            }
            Err(error) => {
                attempt.error = Some(error);
                attempts.push(attempt);
            }
        }
    }
    Err(StageFailure::Exhausted {
        stage: STAGE,
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;
    use crate::llm::ProviderConfig;

    fn client(stub: &str) -> LlmClient {
        LlmClient::new(ProviderConfig::stub(stub)).unwrap()
    }

    #[test]
    fn describe_returns_stub_prose() {
        let schema = envs::schema("pointmass").unwrap();
        let mut llm = client("happy_path");
        let result = describe_environment(&schema, "", &mut llm, 3).unwrap();
        assert!(result.value.contains("pointmass"));
        assert_eq!(result.attempts.len(), 1);
    }

    #[test]
    fn describe_exhausts_on_empty_responses() {
        let schema = envs::schema("pointmass").unwrap();
        let mut llm = client("describe_empty");
        match describe_environment(&schema, "", &mut llm, 3) {
            Err(StageFailure::Exhausted { stage, attempts }) => {
                assert_eq!(stage, "describe_environment");
                assert_eq!(attempts.len(), 3);
                assert_eq!(llm.calls(), 3);
            }
            other => panic!("expected exhaustion, got {:?}", other.map(|r| r.value)),
        }
    }

    #[test]
    fn reward_succeeds_first_attempt_on_happy_stub() {
        let schema = envs::schema("pointmass").unwrap();
        let mut llm = client("happy_path");
        let result = generate_reward_program(
            "move forward",
            "name: pointmass",
            &schema,
            "reward = 0",
            "",
            &mut llm,
            3,
            "",
            "",
        )
        .unwrap();
        assert_eq!(result.attempts.len(), 1);
        assert!(result.attempts[0].accepted());
    }

    #[test]
    fn reward_repair_feeds_error_verbatim_into_second_prompt() {
        let schema = envs::schema("pointmass").unwrap();
        let mut llm = client("reward_invalid_then_valid");
        let result = generate_reward_program(
            "move forward",
            "name: pointmass",
            &schema,
            "reward = 0",
            "",
            &mut llm,
            3,
            "",
            "",
        )
        .unwrap();
        assert_eq!(result.attempts.len(), 2);
        let first_error = result.attempts[0].error.as_ref().unwrap();
        assert!(first_error.contains("torso_height"));
        let second_prompt = &result.attempts[1].prompt[1].content;
        assert!(
            second_prompt.contains(&format!("ERROR\n{first_error}")),
            "second prompt must quote the first error verbatim"
        );
        assert!(second_prompt.contains("PREVIOUS PROGRAM\nreward = torso_height"));
    }

    #[test]
    fn reward_garbage_exhausts_with_n_attempts() {
        let schema = envs::schema("pointmass").unwrap();
        let mut llm = client("reward_garbage");
        match generate_reward_program(
            "move forward",
            "name: pointmass",
            &schema,
            "reward = 0",
            "",
            &mut llm,
            4,
            "",
            "",
        ) {
            Err(StageFailure::Exhausted { attempts, .. }) => {
                assert_eq!(attempts.len(), 4);
                assert!(attempts.iter().all(|a| !a.accepted()));
            }
            other => panic!("expected exhaustion, got {:?}", other.map(|r| r.value)),
        }
    }

    #[test]
    fn eval_garbage_exhausts() {
        let schema = envs::schema("pointmass").unwrap();
        let mut llm = client("eval_garbage");
        let summary = TrainingSummary {
            environment: "pointmass".into(),
            total_steps: 100,
            final_eval_return: 1.0,
            reward_source: "reward = vx".into(),
        };
        match generate_eval_program(
            "move forward",
            "name: pointmass",
            &schema,
            "metric final_x = final(x)",
            "",
            &summary,
            &mut llm,
            2,
            "",
            "",
        ) {
            Err(StageFailure::Exhausted { attempts, stage }) => {
                assert_eq!(stage, "generate_eval_program");
                assert_eq!(attempts.len(), 2);
                assert!(attempts[0].error.as_ref().unwrap().contains("median"));
            }
            other => panic!("expected exhaustion, got {:?}", other.map(|r| r.value)),
        }
    }

    #[test]
    fn unparseable_verdicts_exhaust() {
        use crate::dsl::{MetricReport, PerformanceReport};
        let report = PerformanceReport {
            environment: "pointmass".into(),
            checkpoint: "ck".into(),
            episodes: 10,
            metrics: vec![MetricReport {
                name: "final_x".into(),
                per_episode: vec![6.0],
                mean: 6.0,
                std: 0.0,
            }],
        };
        let mut llm = client("verdict_unparseable");
        match assess_performance(
            "move forward",
            "name: pointmass",
            "",
            "reward = vx",
            "metric final_x = final(x)",
            &report,
            &mut llm,
            3,
        ) {
            Err(StageFailure::Exhausted { stage, attempts }) => {
                assert_eq!(stage, "assess_performance");
                assert_eq!(attempts.len(), 3);
            }
            other => panic!("expected exhaustion, got {:?}", other.map(|r| r.value)),
        }
    }
}
