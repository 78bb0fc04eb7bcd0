//! Live transport: OpenAI-compatible chat completions over HTTP(S) with
//! bounded retries on transport failures.

use std::time::Duration;

use serde::Deserialize;

use super::{LlmError, ProviderConfig, RequestBody};

pub struct HttpBackend {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: String,
    max_retries: u32,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

impl HttpBackend {
    pub fn new(config: &ProviderConfig) -> Result<Self, LlmError> {
        let base_url = config
            .base_url
            .clone()
            .ok_or(LlmError::MissingBaseUrl)?
            .trim_end_matches('/')
            .to_string();
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| LlmError::MissingApiKey(config.api_key_env.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Transport {
                attempts: 0,
                detail: e.to_string(),
            })?;
        Ok(HttpBackend {
            client,
            base_url,
            api_key,
            max_retries: config.max_retries,
        })
    }

    pub fn complete(
        &self,
        request: &RequestBody,
        _config: &ProviderConfig,
    ) -> Result<String, LlmError> {
        let url = format!("{}/chat/completions", self.base_url);
        let mut last_err = String::new();
        for attempt in 0..=self.max_retries {
            match self
                .client
                .post(&url)
                .bearer_auth(&self.api_key)
                .json(request)
                .send()
            {
                Ok(resp) => {
                    let status = resp.status();
                    let body = resp.text().map_err(|e| LlmError::Transport {
                        attempts: attempt + 1,
                        detail: e.to_string(),
                    })?;
                    if !status.is_success() {
                        return Err(LlmError::Http {
                            status: status.as_u16(),
                            body: body.chars().take(500).collect(),
                        });
                    }
                    let parsed: CompletionResponse = serde_json::from_str(&body)
                        .map_err(|e| LlmError::BadResponse(e.to_string()))?;
                    let content = parsed
                        .choices
                        .first()
                        .and_then(|c| c.message.content.clone())
                        .ok_or_else(|| {
                            LlmError::BadResponse("response has no message content".into())
                        })?;
                    return Ok(content);
                }
                Err(e) => {
                    last_err = e.to_string();
                }
            }
        }
        Err(LlmError::Transport {
            attempts: self.max_retries + 1,
            detail: last_err,
        })
    }
}
