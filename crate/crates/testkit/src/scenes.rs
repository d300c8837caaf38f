//! Small hand-made scene graphs shared by service and CLI tests.

use roomsmith::scene::{Adjacency, LayoutElement, ObjectNode, Preposition, Room, Rotation, SceneGraph, Size3};

/// A table in the middle of a study with a chair on its left, a lamp on it
/// and a shelf against the north wall.
pub fn study_graph() -> SceneGraph {
    SceneGraph::new(Room::new(4.0, 3.0, 2.5))
        .with_node(ObjectNode::new("table_1", "table", Size3::new(1.2, 0.8, 0.75)).with_style("modern", "walnut"))
        .with_node(
            ObjectNode::new("chair_1", "chair", Size3::new(0.5, 0.5, 0.9))
                .with_style("modern", "oak")
                .with_rotation(Rotation::Deg90),
        )
        .with_node(ObjectNode::new("lamp_1", "table lamp", Size3::new(0.3, 0.3, 0.45)).with_style("modern", "brass"))
        .with_node(ObjectNode::new("shelf_1", "bookshelf", Size3::new(1.0, 0.35, 1.8)).with_style("classic", "oak"))
        .with_edge(LayoutElement::MiddleOfRoom.id(), "table_1", Preposition::On, Adjacency::Adjacent)
        .with_edge("table_1", "chair_1", Preposition::LeftOf, Adjacency::Adjacent)
        .with_edge(LayoutElement::Floor.id(), "chair_1", Preposition::On, Adjacency::Adjacent)
        .with_edge("table_1", "lamp_1", Preposition::On, Adjacency::Adjacent)
        .with_edge(LayoutElement::WallNorth.id(), "shelf_1", Preposition::On, Adjacency::Adjacent)
        .with_edge(LayoutElement::Floor.id(), "shelf_1", Preposition::On, Adjacency::Adjacent)
}

/// [`study_graph`] with the chair moved to the table's right.
pub fn study_graph_chair_right() -> SceneGraph {
    let mut g = study_graph();
    for e in &mut g.edges {
        if e.parent == "table_1" && e.child == "chair_1" {
            e.preposition = Preposition::RightOf;
        }
    }
    g
}
