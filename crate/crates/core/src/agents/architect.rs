use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::designer::proposals_json;
use super::{
    call_with_retries, extract_json, id_stem, instance_ids, timed, AgentError, DesignRequest,
    GenerationBackend, ObjectProposal, PipelineConfig, Stage, StageTranscript,
};
use crate::scene::{Adjacency, Facing, LayoutElement, Preposition};
use crate::schema::{SchemaValidator, ARCHITECT_SCHEMA};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatementPlacement {
    pub preposition: Preposition,
    /// Resolved id of an object instance or a layout element.
    pub anchor: String,
    pub adjacency: Adjacency,
}

/// Where one object instance goes, as decided by the Architect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementStatement {
    pub id: String,
    pub proposal_index: usize,
    pub placement: Vec<StatementPlacement>,
    pub facing: Facing,
}

#[derive(Deserialize)]
struct ArchitectDoc {
    objects: Vec<ArchitectItem>,
}

#[derive(Deserialize)]
struct ArchitectItem {
    instances: Vec<ArchitectInstance>,
}

#[derive(Deserialize)]
struct ArchitectInstance {
    id: String,
    placement: Vec<RawPlacement>,
    facing: Facing,
}

#[derive(Deserialize)]
struct RawPlacement {
    preposition: String,
    anchor: String,
    proximity: String,
}

fn architect_validator() -> &'static SchemaValidator {
    use std::sync::OnceLock;
    static V: OnceLock<SchemaValidator> = OnceLock::new();
    V.get_or_init(|| SchemaValidator::from_text(ARCHITECT_SCHEMA).expect("architect schema compiles"))
}

/// "northwest corner", "north-west", "the NW corner" -> the two walls.
fn parse_corner(anchor: &str) -> Option<[LayoutElement; 2]> {
    let t = anchor.to_ascii_lowercase().replace(['-', '_', ' '], "");
    let t = t.trim_start_matches("the").trim_end_matches("corner");
    let ns = if t.starts_with("north") || t == "nw" || t == "ne" {
        LayoutElement::WallNorth
    } else if t.starts_with("south") || t == "sw" || t == "se" {
        LayoutElement::WallSouth
    } else {
        return None;
    };
    let ew = if t.ends_with("west") || t.ends_with('w') {
        LayoutElement::WallWest
    } else if t.ends_with("east") || t.ends_with('e') {
        LayoutElement::WallEast
    } else {
        return None;
    };
    Some([ns, ew])
}

struct AnchorTable {
    ids: BTreeSet<String>,
    /// Name stems with a single instance map to that instance.
    unique_stems: BTreeMap<String, String>,
}

impl AnchorTable {
    fn new(ids: &[(usize, String)]) -> Self {
        let mut by_stem: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (_, id) in ids {
            let stem = id.rsplit_once('_').map(|(s, _)| s).unwrap_or(id);
            by_stem.entry(stem.to_string()).or_default().push(id.clone());
        }
        Self {
            ids: ids.iter().map(|(_, id)| id.clone()).collect(),
            unique_stems: by_stem
                .into_iter()
                .filter(|(_, v)| v.len() == 1)
                .map(|(k, mut v)| (k, v.remove(0)))
                .collect(),
        }
    }

    /// Layout element or object instance ids for one anchor phrase.
    fn resolve(&self, anchor: &str) -> Option<Vec<String>> {
        let a = anchor.trim();
        if self.ids.contains(a) {
            return Some(vec![a.to_string()]);
        }
        if let Some(e) = LayoutElement::parse_lenient(a) {
            return Some(vec![e.id().to_string()]);
        }
        if let Some(walls) = parse_corner(a) {
            return Some(walls.iter().map(|w| w.id().to_string()).collect());
        }
        let stem = id_stem(a.trim_start_matches("the "));
        self.unique_stems.get(&stem).map(|id| vec![id.clone()])
    }
}

fn parse_architect(
    text: &str,
    expected: &[(usize, String)],
) -> Result<Vec<PlacementStatement>, Vec<String>> {
    let value = extract_json(text).map_err(|e| vec![e])?;
    architect_validator().validate(&value)?;
    let doc: ArchitectDoc = serde_json::from_value(value).map_err(|e| vec![e.to_string()])?;
    let table = AnchorTable::new(expected);
    let mut errors = Vec::new();
    let mut found: BTreeMap<String, PlacementStatement> = BTreeMap::new();
    for inst in doc.objects.into_iter().flat_map(|o| o.instances) {
        let Some((proposal_index, _)) = expected.iter().find(|(_, id)| *id == inst.id) else {
            errors.push(format!("unknown instance id \"{}\"", inst.id));
            continue;
        };
        if found.contains_key(&inst.id) {
            errors.push(format!("instance {} is placed more than once", inst.id));
            continue;
        }
        let mut placement = Vec::new();
        for p in &inst.placement {
            let preposition = Preposition::parse_lenient(&p.preposition)
                .expect("schema restricts prepositions");
            let adjacency =
                Adjacency::parse_lenient(&p.proximity).expect("schema restricts proximity");
            let Some(anchors) = table.resolve(&p.anchor) else {
                errors.push(format!("{}: unknown anchor \"{}\"", inst.id, p.anchor));
                continue;
            };
            for anchor in anchors {
                if anchor == inst.id {
                    errors.push(format!("{} cannot be placed relative to itself", inst.id));
                    continue;
                }
                let layout = LayoutElement::from_id(&anchor).is_some();
                if layout && !preposition.allowed_for_layout_parent() {
                    errors.push(format!(
                        "{}: use \"on\" or \"in the corner\" with {anchor}, not \"{preposition}\"",
                        inst.id
                    ));
                } else if !layout && !preposition.allowed_for_object_parent() {
                    errors.push(format!(
                        "{}: \"{preposition}\" cannot be used with the object {anchor}",
                        inst.id
                    ));
                } else {
                    placement.push(StatementPlacement {
                        preposition,
                        anchor,
                        adjacency,
                    });
                }
            }
        }
        found.insert(
            inst.id.clone(),
            PlacementStatement {
                id: inst.id,
                proposal_index: *proposal_index,
                placement,
                facing: inst.facing,
            },
        );
    }
    for (_, id) in expected {
        if !found.contains_key(id) {
            errors.push(format!("no placement given for instance {id}"));
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(expected
        .iter()
        .map(|(_, id)| found.remove(id).expect("checked above"))
        .collect())
}

fn architect_message(request: &DesignRequest, proposals: &[ObjectProposal]) -> String {
    let layout: Vec<&str> = LayoutElement::ALL.iter().map(|e| e.id()).collect();
    format!(
        "User preference: {}\n{}\nRoom layout elements: {}\nObjects suggested by the Interior Designer:\n{}",
        request.user_text.trim(),
        request.room_line(),
        layout.join(", "),
        serde_json::to_string_pretty(&proposals_json(proposals)).expect("json")
    )
}

/// Asks the Architect where every proposed instance goes.
///
/// Returns one statement per instance, in [`instance_ids`] order.
pub fn run_architect(
    proposals: &[ObjectProposal],
    request: &DesignRequest,
    backend: &dyn GenerationBackend,
    config: &PipelineConfig,
) -> (Result<Vec<PlacementStatement>, AgentError>, StageTranscript) {
    let system = config.prompts.system_prompt(Stage::Architect, request.object_count);
    let mut transcript = StageTranscript::new(Stage::Architect, system.clone());
    if proposals.is_empty() {
        transcript.output = json!([]);
        return (Ok(Vec::new()), transcript);
    }
    let expected = instance_ids(proposals);
    let result = timed(&mut transcript, |t| {
        let (result, record) = call_with_retries(
            backend,
            Stage::Architect,
            &system,
            None,
            architect_message(request, proposals),
            config,
            |text| parse_architect(text, &expected),
        );
        t.calls.push(record);
        result.inspect(|statements| {
            t.output = serde_json::to_value(statements).expect("statements serialize");
        })
    });
    (result, transcript)
}

pub(crate) fn statement_json(s: &PlacementStatement) -> Value {
    json!({
        "placement": s.placement.iter().map(|p| json!({
            "preposition": p.preposition,
            "anchor": p.anchor,
            "proximity": match p.adjacency {
                Adjacency::Adjacent => "Adjacent",
                Adjacency::NotAdjacent => "Not Adjacent",
            },
        })).collect::<Vec<_>>(),
        "facing": s.facing,
    })
}
