use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Agent roles that talk to a backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Designer,
    Architect,
    Engineer,
    Corrector,
    Refiner,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Designer,
        Stage::Architect,
        Stage::Engineer,
        Stage::Corrector,
        Stage::Refiner,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Designer => "designer",
            Stage::Architect => "architect",
            Stage::Engineer => "engineer",
            Stage::Corrector => "corrector",
            Stage::Refiner => "refiner",
        }
    }

    pub fn parse(text: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.as_str() == text)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingParams {
    pub temperature: f64,
    pub top_p: f64,
    /// Ask the backend for a JSON document and nothing else.
    pub structured_output: bool,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self {
            temperature: 0.7,
            top_p: 1.0,
            structured_output: true,
        }
    }
}

impl DecodingParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature >= 0.0) {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(format!("top_p must be in (0, 1], got {}", self.top_p));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Everything a backend sees for one call. The conversation history is
/// explicit; backends keep no state between calls.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationRequest {
    pub stage: Stage,
    pub system: String,
    pub messages: Vec<ChatMessage>,
    pub decoding: DecodingParams,
}

impl GenerationRequest {
    /// Hex SHA-256 over the system prompt and the messages. Decoding
    /// parameters are not part of the key.
    pub fn key(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.system.as_bytes());
        for m in &self.messages {
            h.update([0u8]);
            h.update(match m.role {
                Role::User => b"user".as_slice(),
                Role::Assistant => b"assistant".as_slice(),
            });
            h.update([0u8]);
            h.update(m.content.as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    Malformed(String),
    #[error("no canned response for {stage} request {key}")]
    MissingFixture { stage: Stage, key: String },
}

pub trait GenerationBackend: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError>;
}

impl<B: GenerationBackend + ?Sized> GenerationBackend for &B {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        (**self).generate(request)
    }
}

impl<B: GenerationBackend + ?Sized> GenerationBackend for Box<B> {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        (**self).generate(request)
    }
}

impl<B: GenerationBackend + ?Sized> GenerationBackend for std::sync::Arc<B> {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        (**self).generate(request)
    }
}

/// Responses looked up by `(stage, request key)`.
///
/// On disk a fixture set is a directory with one subdirectory per stage and
/// one `<key>.txt` file per response.
#[derive(Clone, Debug, Default)]
pub struct CannedBackend {
    responses: BTreeMap<(Stage, String), String>,
}

impl CannedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, stage: Stage, key: impl Into<String>, response: impl Into<String>) {
        self.responses.insert((stage, key.into()), response.into());
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn load(dir: &Path) -> std::io::Result<Self> {
        let mut backend = Self::new();
        for stage in Stage::ALL {
            let sub = dir.join(stage.as_str());
            if !sub.is_dir() {
                continue;
            }
            for entry in fs::read_dir(&sub)? {
                let path = entry?.path();
                if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                    continue;
                }
                let Some(key) = path.file_stem().and_then(|s| s.to_str()) else {
                    continue;
                };
                backend.insert(stage, key, fs::read_to_string(&path)?);
            }
        }
        Ok(backend)
    }

    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        for ((stage, key), text) in &self.responses {
            let sub = dir.join(stage.as_str());
            fs::create_dir_all(&sub)?;
            fs::write(sub.join(format!("{key}.txt")), text)?;
        }
        Ok(())
    }
}

impl GenerationBackend for CannedBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        let key = request.key();
        self.responses
            .get(&(request.stage, key.clone()))
            .cloned()
            .ok_or(BackendError::MissingFixture {
                stage: request.stage,
                key,
            })
    }
}

/// Passes calls through and keeps every successful response so the run can
/// be replayed offline with a [`CannedBackend`].
pub struct RecordingBackend<B> {
    inner: B,
    recorded: Mutex<CannedBackend>,
}

impl<B: GenerationBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            recorded: Mutex::new(CannedBackend::new()),
        }
    }

    pub fn recorded(&self) -> CannedBackend {
        self.recorded.lock().expect("recording lock").clone()
    }

    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        self.recorded().save(dir)
    }
}

impl<B: GenerationBackend> GenerationBackend for RecordingBackend<B> {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        let text = self.inner.generate(request)?;
        self.recorded
            .lock()
            .expect("recording lock")
            .insert(request.stage, request.key(), text.clone());
        Ok(text)
    }
}

/// Backend driven by a closure; handy for tests and fixture authoring.
pub struct FnBackend<F>(pub F);

impl<F> GenerationBackend for FnBackend<F>
where
    F: Fn(&GenerationRequest) -> Result<String, BackendError> + Send + Sync,
{
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        (self.0)(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(stage: Stage, text: &str) -> GenerationRequest {
        GenerationRequest {
            stage,
            system: "sys".into(),
            messages: vec![ChatMessage::user(text)],
            decoding: DecodingParams::default(),
        }
    }

    #[test]
    fn key_ignores_decoding_but_not_history() {
        let a = req(Stage::Designer, "hello");
        let mut b = a.clone();
        b.decoding.temperature = 0.0;
        assert_eq!(a.key(), b.key());
        b.messages.push(ChatMessage::assistant("x"));
        assert_ne!(a.key(), b.key());
        assert_eq!(a.key().len(), 64);
    }

    #[test]
    fn canned_lookup_is_per_stage() {
        let r = req(Stage::Designer, "hello");
        let mut c = CannedBackend::new();
        c.insert(Stage::Designer, r.key(), "{}");
        assert_eq!(c.generate(&r).unwrap(), "{}");
        let other = GenerationRequest {
            stage: Stage::Architect,
            ..r
        };
        assert!(matches!(
            c.generate(&other),
            Err(BackendError::MissingFixture { stage: Stage::Architect, .. })
        ));
    }

    #[test]
    fn recording_round_trips_through_disk() {
        let dir = std::env::temp_dir().join(format!("roomsmith-canned-{}", std::process::id()));
        let rec = RecordingBackend::new(FnBackend(|r: &GenerationRequest| {
            Ok(format!("echo {}", r.messages[0].content))
        }));
        let r = req(Stage::Engineer, "desk_1");
        rec.generate(&r).unwrap();
        rec.save(&dir).unwrap();
        let back = CannedBackend::load(&dir).unwrap();
        assert_eq!(back.generate(&r).unwrap(), "echo desk_1");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn decoding_bounds() {
        assert!(DecodingParams::default().validate().is_ok());
        let bad = DecodingParams {
            top_p: 0.0,
            ..DecodingParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
