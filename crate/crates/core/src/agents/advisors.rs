use std::collections::BTreeSet;
use std::sync::Mutex;

use serde::Deserialize;
use serde_json::{json, Value};

use super::{
    call_with_retries, extract_json, CallRecord, GenerationBackend, PipelineConfig, Stage,
    StageTranscript,
};
use crate::corrector::{CorrectionAdvisor, EdgeProposal, OrderingAdvisor, SiblingGroup, Violation};
use crate::scene::{
    is_layout_id, object_validator, Adjacency, Edge, LayoutElement, ObjectDoc, Preposition,
    Rotation, SceneGraph,
};
use crate::schema::{SchemaValidator, REFINER_SCHEMA};

/// Shared bookkeeping: a call budget and the records of every call made.
struct Calls {
    budget: usize,
    records: Mutex<Vec<CallRecord>>,
}

impl Calls {
    fn new(budget: usize) -> Self {
        Self {
            budget,
            records: Mutex::new(Vec::new()),
        }
    }

    fn spent(&self) -> bool {
        self.records.lock().expect("advisor records").len() >= self.budget
    }

    fn push(&self, r: CallRecord) {
        self.records.lock().expect("advisor records").push(r);
    }

    fn transcript(&self, stage: Stage, system: &str) -> StageTranscript {
        let mut t = StageTranscript::new(stage, system.to_string());
        t.calls = self.records.lock().expect("advisor records").clone();
        t
    }
}

fn object_json(graph: &SceneGraph, id: &str) -> Value {
    match graph.node(id) {
        Some(n) => {
            let inbound: Vec<&Edge> = graph.inbound(id).collect();
            serde_json::to_value(ObjectDoc::from_node(n, &inbound)).expect("object docs serialize")
        }
        None => Value::Null,
    }
}

/// The Layout Corrector agent as a [`CorrectionAdvisor`].
///
/// At most one call per object in the graph it was built for; after that it
/// declines and the rule-based fix is used.
pub struct AgentCorrector<'a> {
    backend: &'a dyn GenerationBackend,
    config: &'a PipelineConfig,
    system: String,
    calls: Calls,
}

impl<'a> AgentCorrector<'a> {
    pub fn new(backend: &'a dyn GenerationBackend, config: &'a PipelineConfig, graph: &SceneGraph) -> Self {
        Self {
            backend,
            config,
            system: config.prompts.system_prompt(Stage::Corrector, 0),
            calls: Calls::new(graph.nodes.len()),
        }
    }

    pub fn transcript(&self) -> StageTranscript {
        self.calls.transcript(Stage::Corrector, &self.system)
    }
}

fn parse_fix(text: &str, who: &str, graph: &SceneGraph) -> Result<EdgeProposal, Vec<String>> {
    let value = extract_json(text).map_err(|e| vec![e])?;
    object_validator().validate(&value)?;
    let doc: ObjectDoc = serde_json::from_value(value).map_err(|e| vec![e.to_string()])?;
    if doc.new_object_id != who {
        return Err(vec![format!("return the entry for {who}, not {}", doc.new_object_id)]);
    }
    let unknown: Vec<String> = doc
        .scene_graph
        .iter()
        .filter(|p| !is_layout_id(&p.parent) && !graph.contains(&p.parent))
        .map(|p| format!("unknown parent \"{}\"", p.parent))
        .collect();
    if !unknown.is_empty() {
        return Err(unknown);
    }
    Ok(EdgeProposal {
        inbound: doc.edges().collect(),
        rotation: Some(Rotation::from_facing(doc.facing)),
    })
}

impl CorrectionAdvisor for AgentCorrector<'_> {
    fn propose_fix(&self, graph: &SceneGraph, violation: &Violation) -> Result<EdgeProposal, String> {
        if self.calls.spent() {
            return Err("corrector call budget spent".into());
        }
        let who = violation.mover();
        let message = format!(
            "Conflict: {violation}\nRoom: {} m x {} m x {} m (x, y, height)\nObject ids in the room: {}\nRoom layout element ids: {}\nObject to fix:\n{}",
            graph.room.width_x,
            graph.room.depth_y,
            graph.room.height_z,
            graph.object_ids().join(", "),
            LayoutElement::ALL.map(|e| e.id()).join(", "),
            serde_json::to_string_pretty(&object_json(graph, who)).expect("json"),
        );
        let (result, record) = call_with_retries(
            self.backend,
            Stage::Corrector,
            &self.system,
            Some(who.to_string()),
            message,
            self.config,
            |text| parse_fix(text, who, graph),
        );
        self.calls.push(record);
        result.map_err(|e| e.to_string())
    }
}

#[derive(Deserialize)]
struct RefinerDoc {
    relations: Vec<Relation>,
}

#[derive(Deserialize)]
struct Relation {
    child: String,
    preposition: String,
    anchor: String,
}

fn refiner_validator() -> &'static SchemaValidator {
    use std::sync::OnceLock;
    static V: OnceLock<SchemaValidator> = OnceLock::new();
    V.get_or_init(|| SchemaValidator::from_text(REFINER_SCHEMA).expect("refiner schema compiles"))
}

/// Sibling-to-sibling edges from a Refiner answer. Relations to the parent
/// itself are secondary placements and are not turned into edges.
fn parse_order(text: &str, group: &SiblingGroup) -> Result<Vec<Edge>, Vec<String>> {
    let value = extract_json(text).map_err(|e| vec![e])?;
    refiner_validator().validate(&value)?;
    let doc: RefinerDoc = serde_json::from_value(value).map_err(|e| vec![e.to_string()])?;
    let members: BTreeSet<&str> = group.children.iter().map(String::as_str).collect();
    let mut errors = Vec::new();
    let mut edges = Vec::new();
    for r in doc.relations {
        if !members.contains(r.child.as_str()) {
            errors.push(format!("\"{}\" is not one of the children", r.child));
            continue;
        }
        if r.anchor == group.parent {
            continue;
        }
        if !members.contains(r.anchor.as_str()) || r.anchor == r.child {
            errors.push(format!("{}: anchor \"{}\" must be another child", r.child, r.anchor));
            continue;
        }
        let prep = Preposition::parse_lenient(&r.preposition).expect("schema restricts prepositions");
        edges.push(Edge::new(&r.anchor, &r.child, prep, Adjacency::Adjacent));
    }
    if errors.is_empty() {
        Ok(edges)
    } else {
        Err(errors)
    }
}

/// The Layout Refiner agent as an [`OrderingAdvisor`], one call per group.
pub struct AgentRefiner<'a> {
    backend: &'a dyn GenerationBackend,
    config: &'a PipelineConfig,
    system: String,
    calls: Calls,
}

impl<'a> AgentRefiner<'a> {
    pub fn new(backend: &'a dyn GenerationBackend, config: &'a PipelineConfig, graph: &SceneGraph) -> Self {
        Self {
            backend,
            config,
            system: config.prompts.system_prompt(Stage::Refiner, 0),
            calls: Calls::new(graph.nodes.len()),
        }
    }

    pub fn transcript(&self) -> StageTranscript {
        self.calls.transcript(Stage::Refiner, &self.system)
    }
}

impl OrderingAdvisor for AgentRefiner<'_> {
    fn propose_order(&self, graph: &SceneGraph, group: &SiblingGroup) -> Result<Vec<Edge>, String> {
        if self.calls.spent() {
            return Err("refiner call budget spent".into());
        }
        let input = json!({
            "parent": object_json(graph, &group.parent),
            "first_preposition": group.preposition,
            "children": group.children.iter().map(|c| object_json(graph, c)).collect::<Vec<_>>(),
        });
        let message = serde_json::to_string_pretty(&input).expect("json");
        let (result, record) = call_with_retries(
            self.backend,
            Stage::Refiner,
            &self.system,
            Some(group.parent.clone()),
            message,
            self.config,
            |text| parse_order(text, group),
        );
        self.calls.push(record);
        result.map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{BackendError, FnBackend, GenerationRequest};
    use crate::corrector::{correct_graph, CorrectionSource};
    use crate::scene::{Adjacency::*, ObjectNode, Preposition::*, Room, Size3};

    fn sofa_and_lamp() -> SceneGraph {
        SceneGraph::new(Room::new(4.0, 4.0, 2.5))
            .with_node(ObjectNode::new("sofa_1", "sofa", Size3::new(2.0, 0.9, 0.8)))
            .with_node(ObjectNode::new("lamp_1", "lamp", Size3::new(0.3, 0.3, 1.5)))
            .with_edge("wall_south", "sofa_1", On, Adjacent)
            .with_edge("floor", "sofa_1", On, Adjacent)
            .with_edge("sofa_1", "lamp_1", Behind, NotAdjacent)
            .with_edge("floor", "lamp_1", On, Adjacent)
    }

    #[test]
    fn corrector_answer_is_used() {
        let b = FnBackend(|_: &GenerationRequest| {
            Ok(json!({
                "new_object_id": "lamp_1", "name": "lamp", "style": "", "material": "",
                "size_in_meters": {"Length": 0.3, "Width": 0.3, "Height": 1.5},
                "scene_graph": [
                    {"parent": "sofa_1", "preposition": "right of", "adjacency": "adjacent"},
                    {"parent": "floor", "preposition": "on", "adjacency": "adjacent"}
                ],
                "facing": "north_wall"
            })
            .to_string())
        });
        let config = PipelineConfig::default();
        let g = sofa_and_lamp();
        let adv = AgentCorrector::new(&b, &config, &g);
        let report = correct_graph(&g, Some(&adv), None);
        assert_eq!(report.corrections[0].source, CorrectionSource::Advisor);
        assert!(report.remaining.is_empty());
        assert_eq!(adv.transcript().calls.len(), 1);
    }

    #[test]
    fn unavailable_corrector_falls_back() {
        let b = FnBackend(|_: &GenerationRequest| Err(BackendError::Unavailable("offline".into())));
        let config = PipelineConfig::default();
        let g = sofa_and_lamp();
        let adv = AgentCorrector::new(&b, &config, &g);
        let report = correct_graph(&g, Some(&adv), None);
        assert_eq!(report.corrections[0].source, CorrectionSource::Fallback);
        assert!(report.corrections[0]
            .advisor_note
            .as_deref()
            .unwrap()
            .contains("offline"));
    }

    #[test]
    fn refiner_relations_become_sibling_edges() {
        let g = SceneGraph::new(Room::new(5.0, 4.0, 2.6))
            .with_node(ObjectNode::new("table_1", "table", Size3::new(1.6, 0.9, 0.75)))
            .with_node(ObjectNode::new("chair_1", "chair", Size3::new(0.45, 0.45, 0.9)))
            .with_node(ObjectNode::new("chair_2", "chair", Size3::new(0.45, 0.45, 0.9)))
            .with_edge("middle_of_room", "table_1", On, Adjacent)
            .with_edge("table_1", "chair_1", InFront, Adjacent)
            .with_edge("table_1", "chair_2", InFront, Adjacent);
        let b = FnBackend(|_: &GenerationRequest| {
            Ok(json!({"relations": [
                {"child": "chair_1", "preposition": "in front", "anchor": "table_1"},
                {"child": "chair_1", "preposition": "left of", "anchor": "chair_2"}
            ]})
            .to_string())
        });
        let config = PipelineConfig::default();
        let adv = AgentRefiner::new(&b, &config, &g);
        let report = correct_graph(&g, None, Some(&adv));
        assert_eq!(report.refinement.added, ["(chair_2 -> chair_1, left of, adjacent)"]);
        assert_eq!(report.refinement.groups[0].source, CorrectionSource::Advisor);
    }
}
