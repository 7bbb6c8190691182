//! HTTP chat-completion client: the adapter for models served behind a
//! chat-style endpoint (llama.cpp, vLLM, ollama, hosted APIs).
//!
//! Wire format: POST `{model, messages: [{role, content}...], temperature,
//! max_tokens}`; the reply's first choice's message content is the generated
//! text. Transport errors and HTTP 429/5xx are retried with exponential
//! backoff; other 4xx statuses fail immediately.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::backends::prompt::{
    align_ner_output, parse_classification_output, parse_ner_output, render_classification_prompt,
    render_ner_prompt,
};
use crate::backends::{Backend, BackendError, Prediction, PredictionPayload, Task};
use crate::corpus::{Document, Tokenizer, WhitespaceTokenizer};
use crate::taxonomy::Taxonomy;

fn default_path() -> String {
    "/v1/chat/completions".to_string()
}

fn default_timeout() -> u64 {
    120
}

fn default_max_attempts() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    1000
}

fn default_max_tokens() -> u32 {
    512
}

/// Endpoint settings, normally read from the run config file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    #[serde(default = "default_path")]
    pub path: String,
    pub model: String,
    /// Name of the environment variable holding the API key, if any.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_base_ms: u64,
    /// Decoding temperature; 0 for reproducibility.
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

impl EndpointConfig {
    pub fn url(&self) -> String {
        format!(
            "{}/{}",
            self.base_url.trim_end_matches('/'),
            self.path.trim_start_matches('/')
        )
    }

    fn api_key(&self) -> Option<String> {
        let var = self.api_key_env.as_deref()?;
        match std::env::var(var) {
            Ok(key) if !key.is_empty() => Some(key),
            _ => {
                log::warn!("api_key_env `{var}` is unset or empty; sending unauthenticated");
                None
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GenerationRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl GenerationRequest {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.messages.is_empty() {
            return Err(BackendError::EmptyBatch);
        }
        let first = &self.messages[0].role;
        if first != "system" && first != "user" {
            return Err(BackendError::MalformedResponse(format!(
                "first message role must be system or user, got `{first}`"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationResponse {
    pub text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

fn agent_for(config: &EndpointConfig) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
        .http_status_as_error(false)
        .build()
        .into()
}

fn parse_chat_response(body: &str) -> Result<GenerationResponse, BackendError> {
    let value: serde_json::Value = serde_json::from_str(body)
        .map_err(|e| BackendError::MalformedResponse(format!("invalid JSON: {e}")))?;
    let text = value
        .get("choices")
        .and_then(|c| c.get(0))
        .and_then(|choice| {
            choice
                .pointer("/message/content")
                .or_else(|| choice.get("text"))
        })
        .and_then(|v| v.as_str())
        .ok_or_else(|| {
            BackendError::MalformedResponse("no choices[0].message.content in response".into())
        })?
        .to_string();
    let usage = |field: &str| {
        value
            .pointer(&format!("/usage/{field}"))
            .and_then(|v| v.as_u64())
    };
    Ok(GenerationResponse {
        text,
        prompt_tokens: usage("prompt_tokens"),
        completion_tokens: usage("completion_tokens"),
    })
}

/// POST a generation request, retrying transport errors and HTTP 429/5xx
/// with exponential backoff (base from config, factor 2). After the last
/// attempt a retryable failure surfaces as [`BackendError::Transport`].
pub fn http_generate(
    agent: &ureq::Agent,
    config: &EndpointConfig,
    request: &GenerationRequest,
) -> Result<GenerationResponse, BackendError> {
    request.validate()?;
    let body = json!({
        "model": request.model,
        "messages": request.messages,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    })
    .to_string();
    let url = config.url();
    let attempts = config.max_attempts.max(1);
    let mut last_failure = String::new();
    for attempt in 1..=attempts {
        if attempt > 1 {
            let backoff = config.backoff_base_ms * 2u64.pow(attempt - 2);
            std::thread::sleep(Duration::from_millis(backoff));
        }
        let mut builder = agent.post(&url).header("content-type", "application/json");
        if let Some(key) = config.api_key() {
            builder = builder.header("authorization", format!("Bearer {key}"));
        }
        match builder.send(body.as_str()) {
            Ok(mut response) => {
                let status = response.status().as_u16();
                if (200..300).contains(&status) {
                    let text = response.body_mut().read_to_string().map_err(|e| {
                        BackendError::MalformedResponse(format!("unreadable body: {e}"))
                    })?;
                    return parse_chat_response(&text);
                }
                if status == 429 || status >= 500 {
                    last_failure = format!("HTTP {status}");
                    log::warn!("attempt {attempt}/{attempts} to {url}: {last_failure}");
                    continue;
                }
                return Err(BackendError::BadStatus { status });
            }
            Err(e) => {
                last_failure = e.to_string();
                log::warn!("attempt {attempt}/{attempts} to {url}: {last_failure}");
            }
        }
    }
    Err(BackendError::Transport {
        attempts,
        message: last_failure,
    })
}

/// Chat-endpoint backend implementing the classification and NER protocols.
pub struct HttpChatBackend {
    name: String,
    config: EndpointConfig,
    agent: ureq::Agent,
    taxonomy: Arc<Taxonomy>,
}

impl HttpChatBackend {
    pub fn new(name: &str, config: EndpointConfig, taxonomy: Arc<Taxonomy>) -> HttpChatBackend {
        let agent = agent_for(&config);
        HttpChatBackend {
            name: name.to_string(),
            config,
            agent,
            taxonomy,
        }
    }

    fn generate(&self, prompt: String) -> Result<(GenerationResponse, Duration), BackendError> {
        let request = GenerationRequest {
            model: self.config.model.clone(),
            messages: vec![ChatMessage::user(prompt)],
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let started = Instant::now();
        let response = http_generate(&self.agent, &self.config, &request)?;
        Ok((response, started.elapsed()))
    }

    fn predict_attack(&self, docs: &[Document]) -> Result<Vec<Prediction>, BackendError> {
        let events: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
        let prompt = render_classification_prompt(&events)?;
        let (response, latency) = self.generate(prompt)?;
        let parse = parse_classification_output(&self.taxonomy, &response.text, docs.len());
        let per_doc_latency = latency / docs.len() as u32;
        Ok(docs
            .iter()
            .zip(parse.vectors.into_iter().zip(parse.failures))
            .map(|(doc, (scores, failed))| Prediction {
                doc_id: doc.id.clone(),
                payload: PredictionPayload::Attack { scores },
                latency: Some(per_doc_latency),
                failed,
            })
            .collect())
    }

    fn predict_ner(&self, docs: &[Document]) -> Result<Vec<Prediction>, BackendError> {
        let entity_types = self.taxonomy.entity_types();
        docs.iter()
            .map(|doc| {
                let prompt = render_ner_prompt(&doc.text, &entity_types)?;
                let (response, latency) = self.generate(prompt)?;
                let mut extracted = Vec::new();
                for (surface, raw_type) in parse_ner_output(&response.text) {
                    match self.taxonomy.normalize_entity_label(&raw_type) {
                        Ok(t) => extracted.push((surface, t)),
                        Err(_) => {
                            log::warn!("dropping NER output with unknown type `{raw_type}`")
                        }
                    }
                }
                let tokens = WhitespaceTokenizer.tokenize(&doc.text);
                let tags = align_ner_output(&doc.text, &tokens, &extracted);
                Ok(Prediction {
                    doc_id: doc.id.clone(),
                    payload: PredictionPayload::Ner { tags },
                    latency: Some(latency),
                    failed: false,
                })
            })
            .collect()
    }
}

impl Backend for HttpChatBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports(&self, task: Task) -> bool {
        matches!(task, Task::Attack | Task::Ner)
    }

    fn predict_batch(
        &self,
        task: Task,
        docs: &[Document],
    ) -> Result<Vec<Prediction>, BackendError> {
        match task {
            Task::Attack => self.predict_attack(docs),
            Task::Ner => self.predict_ner(docs),
            Task::Binary => Err(BackendError::UnsupportedTask {
                backend: self.name.clone(),
                task,
            }),
        }
    }
}
