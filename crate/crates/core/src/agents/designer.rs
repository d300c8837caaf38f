use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    call_with_retries, extract_json, id_stem, timed, AgentError, DesignRequest, GenerationBackend,
    PipelineConfig, Stage, StageTranscript,
};
use crate::scene::{Size3, SizeDoc};
use crate::schema::{SchemaValidator, DESIGNER_SCHEMA};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectProposal {
    pub name: String,
    pub style: String,
    pub material: String,
    pub size: Size3,
    pub quantity: usize,
}

#[derive(Deserialize)]
struct DesignerDoc {
    objects: Vec<DesignerItem>,
}

#[derive(Deserialize)]
struct DesignerItem {
    name: String,
    architecture_style: String,
    material: String,
    bounding_box_size: SizeDoc,
    quantity: usize,
}

/// Words that mark door and window furnishings.
const OPENING_WORDS: &[&str] = &[
    "door", "doors", "doormat", "window", "windows", "curtain", "curtains", "blind", "blinds",
    "drape", "drapes", "shutter", "shutters", "valance", "windowsill",
];

fn is_opening_item(name: &str) -> bool {
    name.to_ascii_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .any(|w| OPENING_WORDS.contains(&w))
}

fn designer_validator() -> &'static SchemaValidator {
    use std::sync::OnceLock;
    static V: OnceLock<SchemaValidator> = OnceLock::new();
    V.get_or_init(|| SchemaValidator::from_text(DESIGNER_SCHEMA).expect("designer schema compiles"))
}

fn parse_designer(text: &str) -> Result<Vec<ObjectProposal>, Vec<String>> {
    let value = extract_json(text).map_err(|e| vec![e])?;
    designer_validator().validate(&value)?;
    let doc: DesignerDoc = serde_json::from_value(value).map_err(|e| vec![e.to_string()])?;
    let rejected: Vec<String> = doc
        .objects
        .iter()
        .filter(|o| is_opening_item(&o.name))
        .map(|o| format!("\"{}\" is related to doors or windows; suggest something else", o.name))
        .collect();
    if !rejected.is_empty() {
        return Err(rejected);
    }
    Ok(doc
        .objects
        .into_iter()
        .map(|o| ObjectProposal {
            name: o.name.trim().to_string(),
            style: o.architecture_style,
            material: o.material,
            size: o.bounding_box_size.into(),
            quantity: o.quantity,
        })
        .collect())
}

/// Instance ids in proposal order: `(proposal index, id)`. Proposals sharing
/// a name stem continue the same numbering.
pub fn instance_ids(proposals: &[ObjectProposal]) -> Vec<(usize, String)> {
    let mut next: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, p) in proposals.iter().enumerate() {
        let stem = id_stem(&p.name);
        for _ in 0..p.quantity {
            let k = next.entry(stem.clone()).or_insert(0);
            *k += 1;
            out.push((i, format!("{stem}_{k}")));
        }
    }
    out
}

pub(crate) fn proposals_json(proposals: &[ObjectProposal]) -> Value {
    let ids = instance_ids(proposals);
    Value::Array(
        proposals
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mine: Vec<&str> = ids
                    .iter()
                    .filter(|(j, _)| *j == i)
                    .map(|(_, id)| id.as_str())
                    .collect();
                json!({
                    "name": p.name,
                    "architecture_style": p.style,
                    "material": p.material,
                    "bounding_box_size": SizeDoc::from(p.size),
                    "quantity": p.quantity,
                    "instance_ids": mine,
                })
            })
            .collect(),
    )
}

fn designer_message(request: &DesignRequest) -> String {
    format!(
        "User preference: {}\n{}",
        request.user_text.trim(),
        request.room_line()
    )
}

/// Asks the Designer for object proposals.
///
/// With `object_count == 0` no call is made. Answers listing more than
/// `object_count` objects are cut to the first `object_count`.
pub fn run_designer(
    request: &DesignRequest,
    backend: &dyn GenerationBackend,
    config: &PipelineConfig,
) -> (Result<Vec<ObjectProposal>, AgentError>, StageTranscript) {
    let system = config.prompts.system_prompt(Stage::Designer, request.object_count);
    let mut transcript = StageTranscript::new(Stage::Designer, system.clone());
    if let Err(e) = request.validate() {
        return (Err(AgentError::InvalidRequest(e)), transcript);
    }
    if request.object_count == 0 {
        transcript.output = json!([]);
        return (Ok(Vec::new()), transcript);
    }
    let result = timed(&mut transcript, |t| {
        let (result, record) = call_with_retries(
            backend,
            Stage::Designer,
            &system,
            None,
            designer_message(request),
            config,
            parse_designer,
        );
        t.calls.push(record);
        result.map(|mut proposals| {
            proposals.truncate(request.object_count);
            t.output = proposals_json(&proposals);
            proposals
        })
    });
    (result, transcript)
}
