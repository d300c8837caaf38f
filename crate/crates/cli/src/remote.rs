//! Clients for OpenAI-compatible chat, embedding and vision endpoints.
//!
//! All three are blocking. Each call builds its own HTTP client so that no
//! client outlives the thread that made it; calls take seconds, so the lost
//! connection reuse does not matter.

use std::thread::sleep;
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use roomsmith::agents::{BackendError, GenerationBackend, GenerationRequest, Role};
use roomsmith::eval::{VisionClient, VisionRequest};
use roomsmith::retrieval::{Embedder, RetrievalError};

use crate::config::Endpoint;

/// Longest error body kept in messages.
const BODY_EXCERPT: usize = 500;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RemoteError {
    #[error("{url}: {message}")]
    Transport { url: String, message: String },
    #[error("{url}: HTTP {status}: {body}")]
    Status { url: String, status: u16, body: String },
    #[error("{url}: unexpected response: {message}")]
    Shape { url: String, message: String },
}

fn excerpt(body: &str) -> String {
    match body.char_indices().nth(BODY_EXCERPT) {
        Some((i, _)) => format!("{}...", &body[..i]),
        None => body.to_string(),
    }
}

fn retryable(e: &RemoteError) -> bool {
    match e {
        RemoteError::Transport { .. } => true,
        RemoteError::Status { status, .. } => *status == 429 || *status >= 500,
        RemoteError::Shape { .. } => false,
    }
}

/// POSTs `body` and returns the decoded JSON answer, retrying transient
/// failures with exponential backoff.
fn post_json(endpoint: &Endpoint, key: &str, body: &Value) -> Result<Value, RemoteError> {
    let url = endpoint.url.clone();
    let client = reqwest::blocking::Client::builder()
        .timeout(endpoint.timeout())
        .build()
        .map_err(|e| RemoteError::Transport { url: url.clone(), message: e.to_string() })?;
    let mut delay = Duration::from_millis(endpoint.backoff_ms);
    let mut attempt = 1;
    loop {
        let result = client
            .post(&url)
            .bearer_auth(key)
            .json(body)
            .send()
            .map_err(|e| RemoteError::Transport { url: url.clone(), message: e.to_string() })
            .and_then(|r| {
                let status = r.status();
                let text = r
                    .text()
                    .map_err(|e| RemoteError::Transport { url: url.clone(), message: e.to_string() })?;
                if !status.is_success() {
                    return Err(RemoteError::Status { url: url.clone(), status: status.as_u16(), body: excerpt(&text) });
                }
                serde_json::from_str(&text).map_err(|e| RemoteError::Shape { url: url.clone(), message: e.to_string() })
            });
        match result {
            Err(e) if retryable(&e) && attempt < endpoint.max_attempts => {
                tracing::warn!(attempt, error = %e, "retrying");
                sleep(delay);
                delay *= 2;
                attempt += 1;
            }
            other => return other,
        }
    }
}

fn message_content(url: &str, answer: &Value) -> Result<String, RemoteError> {
    answer["choices"][0]["message"]["content"]
        .as_str()
        .map(String::from)
        .ok_or_else(|| RemoteError::Shape {
            url: url.to_string(),
            message: "no choices[0].message.content".into(),
        })
}

/// The agent backend over a chat completions endpoint.
pub struct RemoteChat {
    endpoint: Endpoint,
    key: String,
}

impl RemoteChat {
    pub fn new(endpoint: Endpoint, key: String) -> Self {
        Self { endpoint, key }
    }

    pub fn request_body(&self, request: &GenerationRequest) -> Value {
        let mut messages = vec![json!({"role": "system", "content": request.system})];
        for m in &request.messages {
            let role = match m.role {
                Role::User => "user",
                Role::Assistant => "assistant",
            };
            messages.push(json!({"role": role, "content": m.content}));
        }
        let mut body = json!({
            "model": self.endpoint.model,
            "messages": messages,
            "temperature": request.decoding.temperature,
            "top_p": request.decoding.top_p,
        });
        if request.decoding.structured_output {
            body["response_format"] = json!({"type": "json_object"});
        }
        body
    }
}

impl GenerationBackend for RemoteChat {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        let answer = post_json(&self.endpoint, &self.key, &self.request_body(request)).map_err(|e| match e {
            RemoteError::Status { status, body, .. } => BackendError::Http { status, body },
            RemoteError::Transport { .. } => BackendError::Unavailable(e.to_string()),
            RemoteError::Shape { .. } => BackendError::Malformed(e.to_string()),
        })?;
        message_content(&self.endpoint.url, &answer).map_err(|e| BackendError::Malformed(e.to_string()))
    }
}

/// Text embeddings from an embeddings endpoint.
pub struct RemoteEmbedder {
    endpoint: Endpoint,
    key: String,
}

impl RemoteEmbedder {
    pub fn new(endpoint: Endpoint, key: String) -> Self {
        Self { endpoint, key }
    }
}

impl Embedder for RemoteEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, RetrievalError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let body = json!({"model": self.endpoint.model, "input": texts});
        let answer = post_json(&self.endpoint, &self.key, &body)
            .map_err(|e| RetrievalError::EmbedderUnavailable(e.to_string()))?;
        let shape = |m: &str| RetrievalError::EmbedderUnavailable(format!("{}: {m}", self.endpoint.url));
        let data = answer["data"].as_array().ok_or_else(|| shape("no data array"))?;
        let mut out: Vec<Option<Vec<f32>>> = vec![None; texts.len()];
        for (pos, item) in data.iter().enumerate() {
            let i = item["index"].as_u64().map(|i| i as usize).unwrap_or(pos);
            let vector = item["embedding"]
                .as_array()
                .ok_or_else(|| shape("item without embedding"))?
                .iter()
                .map(|v| v.as_f64().map(|f| f as f32))
                .collect::<Option<Vec<f32>>>()
                .ok_or_else(|| shape("non-numeric embedding"))?;
            *out.get_mut(i).ok_or_else(|| shape("index out of range"))? = Some(vector);
        }
        out.into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| shape("fewer vectors than texts"))
    }
}

/// The scene grader over a chat endpoint that accepts images.
pub struct RemoteVision {
    endpoint: Endpoint,
    key: String,
}

impl RemoteVision {
    pub fn new(endpoint: Endpoint, key: String) -> Self {
        Self { endpoint, key }
    }

    pub fn request_body(&self, request: &VisionRequest) -> Value {
        let mut content = vec![json!({"type": "text", "text": request.prompt})];
        for image in &request.images {
            let data = base64::engine::general_purpose::STANDARD.encode(&image.data);
            content.push(json!({
                "type": "image_url",
                "image_url": {"url": format!("data:{};base64,{data}", image.media_type)},
            }));
        }
        json!({
            "model": self.endpoint.model,
            "messages": [{"role": "user", "content": content}],
        })
    }
}

impl VisionClient for RemoteVision {
    fn complete(&self, request: &VisionRequest) -> Result<String, String> {
        let answer = post_json(&self.endpoint, &self.key, &self.request_body(request)).map_err(|e| e.to_string())?;
        message_content(&self.endpoint.url, &answer).map_err(|e| e.to_string())
    }
}
