use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::architect::statement_json;
use super::{
    call_with_retries, extract_json, timed, AgentError, CallRecord, GenerationBackend,
    ObjectProposal, PipelineConfig, PlacementStatement, Stage, StageTranscript,
};
use crate::scene::{is_layout_id, object_validator, LayoutElement, ObjectDoc, Room, SceneGraph, SizeDoc};

/// An instance the Engineer never produced a valid entry for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroppedObject {
    pub id: String,
    pub error: String,
}

/// Which Designer proposal an object node came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub id: String,
    pub proposal_index: usize,
    pub proposal_name: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineerOutput {
    pub graph: SceneGraph,
    pub dropped: Vec<DroppedObject>,
    /// Edges whose parent was dropped, and repeated edges.
    pub removed_edges: Vec<String>,
    pub provenance: Vec<Provenance>,
}

fn engineer_message(p: &ObjectProposal, s: &PlacementStatement, all_ids: &[String]) -> String {
    let input = json!({
        "new_object_id": s.id,
        "name": p.name,
        "architecture_style": p.style,
        "material": p.material,
        "size_in_meters": SizeDoc::from(p.size),
        "Placement": statement_json(s)["placement"],
        "Facing": s.facing,
    });
    format!(
        "Object to save:\n{}\nObject ids in the room: {}\nRoom layout element ids: {}",
        serde_json::to_string_pretty(&input).expect("json"),
        all_ids.join(", "),
        LayoutElement::ALL.map(|e| e.id()).join(", ")
    )
}

fn parse_object(text: &str, id: &str, known: &BTreeSet<&str>) -> Result<ObjectDoc, Vec<String>> {
    let value = extract_json(text).map_err(|e| vec![e])?;
    object_validator().validate(&value)?;
    let doc: ObjectDoc = serde_json::from_value(value).map_err(|e| vec![e.to_string()])?;
    let mut errors = Vec::new();
    if doc.new_object_id != id {
        errors.push(format!("new_object_id must be \"{id}\", got \"{}\"", doc.new_object_id));
    }
    for p in &doc.scene_graph {
        if p.parent == id {
            errors.push(format!("{id} cannot be its own parent"));
        } else if !known.contains(p.parent.as_str()) {
            errors.push(format!("unknown parent \"{}\"", p.parent));
        } else if is_layout_id(&p.parent) && !p.preposition.allowed_for_layout_parent() {
            errors.push(format!(
                "\"{}\" is not allowed with the layout element {}",
                p.preposition, p.parent
            ));
        } else if !is_layout_id(&p.parent) && !p.preposition.allowed_for_object_parent() {
            errors.push(format!("\"{}\" is not allowed with the object {}", p.preposition, p.parent));
        }
    }
    if errors.is_empty() {
        Ok(doc)
    } else {
        Err(errors)
    }
}

/// Structures each instance with its own Engineer call.
///
/// Calls run on up to `config.engineer_parallelism` threads; the transcript
/// lists them in statement order. Instances that never validate are dropped
/// and recorded. A backend failure fails the stage.
pub fn run_engineer(
    proposals: &[ObjectProposal],
    statements: &[PlacementStatement],
    room: Room,
    backend: &dyn GenerationBackend,
    config: &PipelineConfig,
) -> (Result<EngineerOutput, AgentError>, StageTranscript) {
    let system = config.prompts.system_prompt(Stage::Engineer, 0);
    let mut transcript = StageTranscript::new(Stage::Engineer, system.clone());
    let result = timed(&mut transcript, |t| {
        let all_ids: Vec<String> = statements.iter().map(|s| s.id.clone()).collect();
        let known: BTreeSet<&str> = all_ids
            .iter()
            .map(String::as_str)
            .chain(LayoutElement::ALL.iter().map(|e| e.id()))
            .collect();
        type Slot = Option<(Result<ObjectDoc, AgentError>, CallRecord)>;
        let slots: Mutex<Vec<Slot>> = Mutex::new(vec![None; statements.len()]);
        let next = AtomicUsize::new(0);
        let workers = config.engineer_parallelism.min(statements.len()).max(1);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(s) = statements.get(i) else { break };
                    let p = &proposals[s.proposal_index];
                    let out = call_with_retries(
                        backend,
                        Stage::Engineer,
                        &system,
                        Some(s.id.clone()),
                        engineer_message(p, s, &all_ids),
                        config,
                        |text| parse_object(text, &s.id, &known),
                    );
                    slots.lock().expect("engineer slots")[i] = Some(out);
                });
            }
        });

        let mut docs = Vec::new();
        let mut dropped = Vec::new();
        let mut first_backend_error = None;
        for (slot, s) in slots.into_inner().expect("engineer slots").into_iter().zip(statements) {
            let (result, record) = slot.expect("every statement is processed");
            t.calls.push(record);
            match result {
                Ok(doc) => docs.push((doc, s.proposal_index)),
                Err(e @ AgentError::BackendUnavailable { .. }) => {
                    first_backend_error.get_or_insert(e);
                }
                Err(e) => dropped.push(DroppedObject {
                    id: s.id.clone(),
                    error: e.to_string(),
                }),
            }
        }
        if let Some(e) = first_backend_error {
            return Err(e);
        }

        let kept: BTreeSet<&str> = docs.iter().map(|(d, _)| d.new_object_id.as_str()).collect();
        let mut graph = SceneGraph::new(room);
        let mut removed_edges = Vec::new();
        let mut provenance = Vec::new();
        let mut seen = BTreeSet::new();
        for (doc, proposal_index) in &docs {
            graph.nodes.push(doc.to_node());
            for e in doc.edges() {
                let fresh = seen.insert((e.parent.clone(), e.child.clone(), e.preposition));
                if fresh && (is_layout_id(&e.parent) || kept.contains(e.parent.as_str())) {
                    graph.edges.push(e);
                } else {
                    removed_edges.push(e.to_string());
                }
            }
            provenance.push(Provenance {
                id: doc.new_object_id.clone(),
                proposal_index: *proposal_index,
                proposal_name: proposals[*proposal_index].name.clone(),
            });
        }
        t.output = json!({
            "objects": docs.iter().map(|(d, _)| d).collect::<Vec<_>>(),
            "dropped": dropped,
            "removed_edges": removed_edges,
            "provenance": provenance,
        });
        Ok(EngineerOutput {
            graph,
            dropped,
            removed_edges,
            provenance,
        })
    });
    (result, transcript)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{FnBackend, GenerationRequest, StatementPlacement};
    use crate::scene::{Adjacency, Facing, Preposition, Rotation, Size3};
    use serde_json::Value;

    fn proposals() -> Vec<ObjectProposal> {
        let p = |name: &str, q| ObjectProposal {
            name: name.into(),
            style: "modern".into(),
            material: "oak".into(),
            size: Size3::new(1.0, 0.5, 0.8),
            quantity: q,
        };
        vec![p("desk", 1), p("chair", 2)]
    }

    fn statement(id: &str, idx: usize, prep: Preposition, anchor: &str, facing: Facing) -> PlacementStatement {
        PlacementStatement {
            id: id.into(),
            proposal_index: idx,
            placement: vec![StatementPlacement {
                preposition: prep,
                anchor: anchor.into(),
                adjacency: Adjacency::Adjacent,
            }],
            facing,
        }
    }

    fn statements() -> Vec<PlacementStatement> {
        vec![
            statement("desk_1", 0, Preposition::On, "middle_of_room", Facing::North),
            statement("chair_1", 1, Preposition::LeftOf, "desk_1", Facing::East),
            statement("chair_2", 1, Preposition::RightOf, "desk_1", Facing::West),
        ]
    }

    /// Copies the request into a document, the way a well-behaved model would.
    fn faithful(r: &GenerationRequest) -> Result<String, crate::agents::BackendError> {
        let text = &r.messages[0].content;
        let start = text.find('{').unwrap();
        let end = text.rfind('}').unwrap();
        let input: Value = serde_json::from_str(&text[start..=end]).unwrap();
        let placement: Vec<Value> = input["Placement"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| {
                json!({
                    "parent": p["anchor"],
                    "preposition": p["preposition"],
                    "adjacency": if p["proximity"] == "Adjacent" { "adjacent" } else { "not_adjacent" },
                })
            })
            .collect();
        Ok(json!({
            "new_object_id": input["new_object_id"],
            "name": input["name"],
            "style": input["architecture_style"],
            "material": input["material"],
            "size_in_meters": input["size_in_meters"],
            "scene_graph": placement,
            "facing": input["Facing"],
        })
        .to_string())
    }

    #[test]
    fn each_instance_becomes_a_node() {
        let b = FnBackend(faithful);
        let (r, t) = run_engineer(&proposals(), &statements(), Room::new(4.0, 3.0, 2.5), &b, &PipelineConfig::default());
        let out = r.unwrap();
        assert_eq!(out.graph.nodes.len(), 3);
        let desk = out.graph.node("desk_1").unwrap();
        assert_eq!(desk.rotation, Rotation::Deg0);
        assert_eq!(out.graph.edges[0].to_string(), "(middle_of_room -> desk_1, on, adjacent)");
        assert_eq!(out.graph.edges[1].to_string(), "(desk_1 -> chair_1, left of, adjacent)");
        assert_eq!(out.graph.edges[2].to_string(), "(desk_1 -> chair_2, right of, adjacent)");
        assert_eq!(out.graph.node("chair_2").unwrap().rotation, Rotation::Deg270);
        assert_eq!(t.calls.iter().map(|c| c.subject.clone().unwrap()).collect::<Vec<_>>(), ["desk_1", "chair_1", "chair_2"]);
        assert_eq!(out.provenance[2].proposal_name, "chair");
    }

    #[test]
    fn invalid_every_time_drops_the_object() {
        let b = FnBackend(|r: &GenerationRequest| {
            if r.messages[0].content.contains("\"new_object_id\": \"desk_1\"") {
                // Well formed JSON that misses required keys.
                Ok(json!({"new_object_id": "desk_1", "name": "desk"}).to_string())
            } else {
                faithful(r)
            }
        });
        let (r, t) = run_engineer(&proposals(), &statements(), Room::new(4.0, 3.0, 2.5), &b, &PipelineConfig::default());
        let out = r.unwrap();
        assert_eq!(out.dropped.len(), 1);
        assert_eq!(out.dropped[0].id, "desk_1");
        assert!(out.dropped[0].error.contains("no valid answer after 4 attempts"));
        assert!(t.calls[0].error.as_deref().unwrap().starts_with("SchemaRetryExhausted"));
        assert_eq!(out.graph.nodes.len(), 2);
        // Both chairs lose their edge to the missing desk.
        assert_eq!(out.removed_edges.len(), 2);
        assert!(out.graph.edges.is_empty());
    }
}
