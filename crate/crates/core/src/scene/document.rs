//! The scene-graph document: the JSON form of a [`SceneGraph`] shared by the
//! Engineer stage, `graph.json` in design bundles, and `solve` inputs.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::geometry::{Facing, Rotation, Size3, Vec3};
use super::types::{Adjacency, ClusterExtents, Edge, ObjectNode, Preposition, Room, SceneGraph};
use crate::schema::{self, SchemaValidator};
use crate::SceneError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeDoc {
    #[serde(rename = "Length")]
    pub length: f64,
    #[serde(rename = "Width")]
    pub width: f64,
    #[serde(rename = "Height")]
    pub height: f64,
}

impl From<SizeDoc> for Size3 {
    fn from(s: SizeDoc) -> Self {
        Size3::new(s.length, s.width, s.height)
    }
}

impl From<Size3> for SizeDoc {
    fn from(s: Size3) -> Self {
        SizeDoc {
            length: s.x,
            width: s.y,
            height: s.z,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementDoc {
    pub parent: String,
    pub preposition: Preposition,
    pub adjacency: Adjacency,
}

/// One object entry, as produced by a single Engineer call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDoc {
    pub new_object_id: String,
    pub name: String,
    pub style: String,
    pub material: String,
    pub size_in_meters: SizeDoc,
    pub scene_graph: Vec<PlacementDoc>,
    pub facing: Facing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_extents: Option<ClusterExtents>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub room: Room,
    pub objects: Vec<ObjectDoc>,
}

impl ObjectDoc {
    pub fn to_node(&self) -> ObjectNode {
        ObjectNode {
            id: self.new_object_id.clone(),
            name: self.name.clone(),
            style: self.style.clone(),
            material: self.material.clone(),
            size: self.size_in_meters.into(),
            rotation: Rotation::from_facing(self.facing),
            position: self.position,
            cluster_extents: self.cluster_extents,
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.scene_graph.iter().map(move |p| Edge {
            parent: p.parent.clone(),
            child: self.new_object_id.clone(),
            preposition: p.preposition,
            adjacency: p.adjacency,
        })
    }

    pub fn from_node(node: &ObjectNode, inbound: &[&Edge]) -> Self {
        ObjectDoc {
            new_object_id: node.id.clone(),
            name: node.name.clone(),
            style: node.style.clone(),
            material: node.material.clone(),
            size_in_meters: node.size.into(),
            scene_graph: inbound
                .iter()
                .map(|e| PlacementDoc {
                    parent: e.parent.clone(),
                    preposition: e.preposition,
                    adjacency: e.adjacency,
                })
                .collect(),
            facing: node.rotation.facing(),
            position: node.position,
            cluster_extents: node.cluster_extents,
        }
    }
}

impl GraphDocument {
    pub fn to_graph(&self) -> SceneGraph {
        let mut graph = SceneGraph::new(self.room);
        for obj in &self.objects {
            graph.nodes.push(obj.to_node());
            graph.edges.extend(obj.edges());
        }
        graph
    }

    /// Edges are grouped under their child; edges whose child is not an
    /// object node have no place in the document and are dropped.
    pub fn from_graph(graph: &SceneGraph) -> Self {
        let objects = graph
            .nodes
            .iter()
            .map(|n| {
                let inbound: Vec<&Edge> = graph.inbound(&n.id).collect();
                ObjectDoc::from_node(n, &inbound)
            })
            .collect();
        GraphDocument {
            room: graph.room,
            objects,
        }
    }
}

/// Parses and schema-checks a scene-graph document.
pub fn parse_graph_document(text: &str) -> Result<SceneGraph, SceneError> {
    let value: Value = serde_json::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
    graph_from_value(&value)
}

pub fn graph_from_value(value: &Value) -> Result<SceneGraph, SceneError> {
    scene_graph_validator()
        .validate(value)
        .map_err(SceneError::Schema)?;
    let doc: GraphDocument =
        serde_json::from_value(value.clone()).map_err(|e| SceneError::Parse(e.to_string()))?;
    Ok(doc.to_graph())
}

/// Pretty-printed document text with a trailing newline.
pub fn serialize_graph(graph: &SceneGraph) -> String {
    let mut s = serde_json::to_string_pretty(&GraphDocument::from_graph(graph))
        .expect("graph documents always serialize");
    s.push('\n');
    s
}

pub fn scene_graph_validator() -> &'static SchemaValidator {
    use std::sync::OnceLock;
    static V: OnceLock<SchemaValidator> = OnceLock::new();
    V.get_or_init(|| {
        SchemaValidator::new(&schema::scene_graph_schema()).expect("shipped scene-graph schema compiles")
    })
}

/// Validator for a single Engineer object entry.
pub fn object_validator() -> &'static SchemaValidator {
    use std::sync::OnceLock;
    static V: OnceLock<SchemaValidator> = OnceLock::new();
    V.get_or_init(|| {
        SchemaValidator::new(&schema::engineer_object_schema()).expect("shipped object schema compiles")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Adjacency::*, Preposition::*};

    fn sample_graph() -> SceneGraph {
        SceneGraph::new(Room::new(4.0, 3.0, 2.4))
            .with_node(
                ObjectNode::new("desk_1", "desk", Size3::new(1.2, 0.6, 0.75))
                    .with_style("modern", "walnut")
                    .with_rotation(Rotation::Deg180),
            )
            .with_node(ObjectNode::new("chair_1", "chair", Size3::new(0.5, 0.5, 0.9)))
            .with_edge("middle_of_room", "desk_1", On, Adjacent)
            .with_edge("desk_1", "chair_1", InFront, Adjacent)
            .with_edge("floor", "chair_1", On, Adjacent)
    }

    #[test]
    fn document_round_trip_preserves_graph() {
        let g = sample_graph();
        let text = serialize_graph(&g);
        let back = parse_graph_document(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(serialize_graph(&back), text);
    }

    #[test]
    fn schema_rejects_unknown_preposition() {
        let mut v: Value = serde_json::from_str(&serialize_graph(&sample_graph())).unwrap();
        v["objects"][0]["scene_graph"][0]["preposition"] = Value::from("beside");
        assert!(matches!(graph_from_value(&v), Err(SceneError::Schema(_))));
    }

    #[test]
    fn schema_rejects_missing_size_key() {
        let mut v: Value = serde_json::from_str(&serialize_graph(&sample_graph())).unwrap();
        v["objects"][0]["size_in_meters"]
            .as_object_mut()
            .unwrap()
            .remove("Height");
        let err = graph_from_value(&v).unwrap_err();
        assert!(err.to_string().contains("Height"), "{err}");
    }
}
