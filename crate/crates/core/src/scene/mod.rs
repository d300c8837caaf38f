//! Rooms, objects, prepositional edges and the scene graph that ties them together.

mod document;
mod geometry;
mod graph;
mod types;

pub use document::{
    graph_from_value, object_validator, parse_graph_document, scene_graph_validator,
    serialize_graph, GraphDocument, ObjectDoc, PlacementDoc, SizeDoc,
};
pub use geometry::{Aabb, Axis, Dir2, Facing, Rotation, Size3, Vec3};
pub use graph::{
    cyclic_components, depth_of, depths, placement_levels, topological_order, validate_graph,
    validate_refined_graph, ValidationError, ValidationReport,
};
pub use types::{
    is_layout_id, Adjacency, ClusterExtents, Edge, LayoutElement, ObjectNode, Preposition, Room,
    SceneGraph,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("graph contains a cycle among {}", nodes.join(", "))]
    CyclicGraph { nodes: Vec<String> },
    #[error("{node} is not reachable from any layout element")]
    Unreachable { node: String },
    #[error("unknown node {id}")]
    UnknownNode { id: String },
    #[error("malformed scene-graph document: {0}")]
    Parse(String),
    #[error("scene-graph document violates the schema: {}", .0.join("; "))]
    Schema(Vec<String>),
}
