//! The agent conversation that turns a design brief into a scene graph.
//!
//! Designer, Architect and Engineer run in sequence over a
//! [`GenerationBackend`]; every call is schema-checked and repaired through
//! a bounded retry loop. The Corrector and Refiner agents act as advisors to
//! the rule engine in [`crate::corrector`].

mod advisors;
mod architect;
mod backend;
mod designer;
mod engineer;
mod pipeline;
mod prompts;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::scene::Room;

pub use advisors::{AgentCorrector, AgentRefiner};
pub use architect::{run_architect, PlacementStatement, StatementPlacement};
pub use backend::{
    BackendError, CannedBackend, ChatMessage, DecodingParams, FnBackend, GenerationBackend,
    GenerationRequest, RecordingBackend, Role, Stage,
};
pub use designer::{instance_ids, run_designer, ObjectProposal};
pub use engineer::{run_engineer, DroppedObject, EngineerOutput, Provenance};
pub use pipeline::{resume_pipeline, run_pipeline, PipelineError, PipelineRun, PriorStages};
pub use prompts::Prompts;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignRequest {
    pub user_text: String,
    pub room: Room,
    /// How many distinct objects the Designer is asked for.
    pub object_count: usize,
}

impl DesignRequest {
    pub fn validate(&self) -> Result<(), String> {
        if !self.room.is_valid() {
            return Err("room dimensions must be positive".into());
        }
        Ok(())
    }

    fn room_line(&self) -> String {
        format!(
            "Room size: {} m (x, west to east) by {} m (y, south to north) by {} m (height).",
            self.room.width_x, self.room.depth_y, self.room.height_z
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Repair round-trips allowed after the first answer of each call.
    pub max_retries: usize,
    /// Engineer calls in flight at once.
    pub engineer_parallelism: usize,
    pub decoding: DecodingParams,
    /// Ask the Corrector agent before applying rule-based fixes.
    pub agent_corrector: bool,
    /// Ask the Refiner agent before chaining siblings by rule.
    pub agent_refiner: bool,
    #[serde(skip)]
    pub prompts: Prompts,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_retries: 3,
            engineer_parallelism: 4,
            decoding: DecodingParams::default(),
            agent_corrector: true,
            agent_refiner: true,
            prompts: Prompts::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.engineer_parallelism == 0 {
            return Err("engineer_parallelism must be positive".into());
        }
        self.decoding.validate()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error("{stage}{}: no valid answer after {attempts} attempts: {last_error}", subject.as_ref().map(|s| format!(" ({s})")).unwrap_or_default())]
    SchemaRetryExhausted {
        stage: Stage,
        subject: Option<String>,
        attempts: usize,
        last_error: String,
    },
    #[error("{stage}: {source}")]
    BackendUnavailable {
        stage: Stage,
        #[source]
        source: BackendError,
    },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("graph is still invalid after correction: {0}")]
    InvalidGraph(String),
}

/// One conversation with the backend: the first prompt plus repair rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    /// User messages in the order they were sent.
    pub prompts: Vec<String>,
    pub responses: Vec<String>,
    pub retry_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTranscript {
    pub stage: Stage,
    pub system_prompt: String,
    pub calls: Vec<CallRecord>,
    /// Parsed stage output.
    pub output: Value,
    /// Not serialized; timings are written separately so transcripts stay
    /// reproducible.
    #[serde(skip)]
    pub duration: Duration,
}

impl StageTranscript {
    fn new(stage: Stage, system_prompt: String) -> Self {
        Self {
            stage,
            system_prompt,
            calls: Vec::new(),
            output: Value::Null,
            duration: Duration::ZERO,
        }
    }

    pub fn retries(&self) -> usize {
        self.calls.iter().map(|c| c.retry_count).sum()
    }
}

/// Parses the first JSON value in `text`, tolerating code fences and chatter
/// around it.
pub(crate) fn extract_json(text: &str) -> Result<Value, String> {
    let trimmed = text.trim();
    if let Ok(v) = serde_json::from_str(trimmed) {
        return Ok(v);
    }
    let start = trimmed
        .find(['{', '['])
        .ok_or_else(|| "response contains no JSON document".to_string())?;
    let mut stream = serde_json::Deserializer::from_str(&trimmed[start..]).into_iter::<Value>();
    match stream.next() {
        Some(Ok(v)) => Ok(v),
        Some(Err(e)) => Err(format!("response is not valid JSON: {e}")),
        None => Err("response contains no JSON document".into()),
    }
}

pub(crate) fn repair_message(errors: &[String]) -> String {
    let mut s = String::from("The previous answer was rejected:\n");
    for e in errors {
        s.push_str("- ");
        s.push_str(e);
        s.push('\n');
    }
    s.push_str("Return the corrected JSON document only.");
    s
}

/// Runs one call with schema repair. `parse` turns a raw answer into the
/// output or a list of problems to send back.
pub(crate) fn call_with_retries<T>(
    backend: &dyn GenerationBackend,
    stage: Stage,
    system: &str,
    subject: Option<String>,
    first: String,
    config: &PipelineConfig,
    parse: impl Fn(&str) -> Result<T, Vec<String>>,
) -> (Result<T, AgentError>, CallRecord) {
    let mut record = CallRecord {
        subject: subject.clone(),
        prompts: vec![first.clone()],
        responses: Vec::new(),
        retry_count: 0,
        error: None,
    };
    let mut messages = vec![ChatMessage::user(first)];
    loop {
        let request = GenerationRequest {
            stage,
            system: system.to_string(),
            messages: messages.clone(),
            decoding: config.decoding,
        };
        let text = match backend.generate(&request) {
            Ok(t) => t,
            Err(source) => {
                record.error = Some(source.to_string());
                return (Err(AgentError::BackendUnavailable { stage, source }), record);
            }
        };
        record.responses.push(text.clone());
        match parse(&text) {
            Ok(out) => return (Ok(out), record),
            Err(errors) => {
                if record.retry_count >= config.max_retries {
                    let last_error = errors.join("; ");
                    record.error = Some(format!("SchemaRetryExhausted: {last_error}"));
                    let err = AgentError::SchemaRetryExhausted {
                        stage,
                        subject,
                        attempts: record.retry_count + 1,
                        last_error,
                    };
                    return (Err(err), record);
                }
                record.retry_count += 1;
                let repair = repair_message(&errors);
                record.prompts.push(repair.clone());
                messages.push(ChatMessage::assistant(text));
                messages.push(ChatMessage::user(repair));
            }
        }
    }
}

/// Runs `f` and stores its wall-clock time in the transcript.
pub(crate) fn timed<T>(transcript: &mut StageTranscript, f: impl FnOnce(&mut StageTranscript) -> T) -> T {
    let started = Instant::now();
    let out = f(transcript);
    transcript.duration = started.elapsed();
    out
}

/// Lowercase snake_case identifier stem for an object name.
pub fn id_stem(name: &str) -> String {
    let mut out = String::new();
    for c in name.trim().chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') && !out.is_empty() {
            out.push('_');
        }
    }
    let out = out.trim_end_matches('_').to_string();
    if out.is_empty() {
        "object".into()
    } else {
        out
    }
}
