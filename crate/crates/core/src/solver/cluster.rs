use std::collections::HashMap;

use crate::scene::{is_layout_id, topological_order, ClusterExtents, SceneError, SceneGraph};

use super::placement::{cluster_offsets, flush_sides};
use super::SolverConfig;

/// Fills `cluster_extents` on every object node.
///
/// Nodes are visited children-first. A node's extents start at its own
/// half-extents and grow to cover each object child's extents over the
/// child's possible offsets: every position across the shared face (or on
/// the top face) that keeps it clear of walls the node stands against, and
/// the smallest gap along a lateral edge. The solver keeps every child's
/// cluster inside its parents' clusters, so the extents bound every
/// placement.
pub fn compute_cluster_extents(
    graph: &SceneGraph,
    config: &SolverConfig,
) -> Result<SceneGraph, SceneError> {
    let order = topological_order(graph)?;
    let mut world: HashMap<String, ClusterExtents> = HashMap::new();
    let mut out = graph.clone();

    for id in order.iter().rev().filter(|id| !is_layout_id(id)) {
        let node = graph.node(id).expect("ordered ids come from the graph");
        let half = node.half_extents();
        let mut cs = ClusterExtents::symmetric(half.x, half.y);
        let flush = flush_sides(graph, id);
        for edge in graph.outbound(id) {
            let Some(child) = graph.node(&edge.child) else { continue };
            let Some(child_cs) = world.get(&child.id) else { continue };
            let Some([dx, dy]) = cluster_offsets(
                edge,
                half,
                node.rotation,
                child.half_extents(),
                child_cs,
                &flush,
                config,
            ) else {
                continue;
            };
            cs.x_neg = cs.x_neg.max(child_cs.x_neg - dx.lo);
            cs.x_pos = cs.x_pos.max(dx.hi + child_cs.x_pos);
            cs.y_neg = cs.y_neg.max(child_cs.y_neg - dy.lo);
            cs.y_pos = cs.y_pos.max(dy.hi + child_cs.y_pos);
        }
        world.insert(id.clone(), cs);
        if let Some(n) = out.node_mut(id) {
            n.cluster_extents = Some(ClusterExtents::from_world(&cs, node.rotation));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Adjacency::*, ObjectNode, Preposition::*, Room, Rotation, Size3};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn leaf_extents_are_half_sizes() {
        let g = SceneGraph::new(Room::new(4.0, 3.0, 2.4))
            .with_node(ObjectNode::new("lamp_1", "lamp", Size3::new(0.3, 0.3, 0.5)))
            .with_edge("floor", "lamp_1", On, Adjacent);
        let g = compute_cluster_extents(&g, &SolverConfig::default()).unwrap();
        assert_eq!(
            g.node("lamp_1").unwrap().cluster_extents,
            Some(ClusterExtents::symmetric(0.15, 0.15))
        );
    }

    #[test]
    fn extents_stored_in_local_frame() {
        // Chair to the table's left; the table faces east so its left is north.
        let g = SceneGraph::new(Room::new(4.0, 3.0, 2.4))
            .with_node(
                ObjectNode::new("table_1", "table", Size3::new(1.6, 0.9, 0.75))
                    .with_rotation(Rotation::Deg90),
            )
            .with_node(ObjectNode::new("chair_1", "chair", Size3::new(0.5, 0.5, 0.9)))
            .with_edge("floor", "table_1", On, Adjacent)
            .with_edge("table_1", "chair_1", LeftOf, Adjacent);
        let g = compute_cluster_extents(&g, &SolverConfig::default()).unwrap();
        let cs = g.node("table_1").unwrap().cluster_extents.unwrap();
        assert!(close(cs.x_neg, 1.3), "{cs:?}");
        assert!(close(cs.x_pos, 0.8));
        assert!(close(cs.y_neg, 0.45) && close(cs.y_pos, 0.45));
    }

    #[test]
    fn cyclic_graph_rejected() {
        let g = SceneGraph::new(Room::new(4.0, 3.0, 2.4))
            .with_node(ObjectNode::new("a_1", "a", Size3::new(0.3, 0.3, 0.5)))
            .with_node(ObjectNode::new("b_1", "b", Size3::new(0.3, 0.3, 0.5)))
            .with_edge("a_1", "b_1", LeftOf, Adjacent)
            .with_edge("b_1", "a_1", LeftOf, Adjacent);
        assert!(compute_cluster_extents(&g, &SolverConfig::default()).is_err());
    }
}
