use std::collections::BTreeMap;

use serde::Serialize;

use crate::scene::{Axis, ClusterExtents, LayoutElement, SceneGraph, Vec3};

use super::placement::{layout_edge_box, object_edge_box, Interval, PlacedParent};
use super::{Placement, SolveError, SolverConfig};

/// Axis-aligned box of allowed center positions for one object.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FeasibleRegion {
    pub x: Interval,
    pub y: Interval,
    pub z: Interval,
}

impl FeasibleRegion {
    pub fn is_empty(&self) -> bool {
        self.x.is_empty() || self.y.is_empty() || self.z.is_empty()
    }

    pub fn axis(&self, axis: Axis) -> Interval {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    pub fn contains(&self, p: Vec3, tol: f64) -> bool {
        self.x.contains(p.x, tol) && self.y.contains(p.y, tol) && self.z.contains(p.z, tol)
    }
}

/// Intersection of the node's per-edge placement boxes, clipped so the
/// node's whole cluster stays inside the room and inside the cluster of
/// every object parent.
///
/// When no edge fixes the height (only lateral relations to objects), the
/// child rests at the same level as its first lateral parent.
pub fn feasible_region(
    node_id: &str,
    graph: &SceneGraph,
    partial: &BTreeMap<String, Placement>,
    config: &SolverConfig,
) -> Result<FeasibleRegion, SolveError> {
    let node = graph
        .node(node_id)
        .ok_or_else(|| SolveError::UnknownNode(node_id.to_string()))?;
    let room = graph.room;
    let h = node.half_extents();
    let cs = node
        .cluster_extents
        .map(|c| c.to_world(node.rotation))
        .unwrap_or_else(|| ClusterExtents::symmetric(h.x, h.y));

    let mut axes = [
        Interval::new(cs.x_neg.max(h.x), room.width_x - cs.x_pos.max(h.x)),
        Interval::new(cs.y_neg.max(h.y), room.depth_y - cs.y_pos.max(h.y)),
        Interval::new(h.z, room.height_z - h.z),
    ];
    let mut z_fixed = false;
    let mut lateral_floor: Option<f64> = None;

    for edge in graph.inbound(node_id) {
        let eb = if let Some(element) = LayoutElement::from_id(&edge.parent) {
            layout_edge_box(edge, element, node, &graph.edges, &room)
        } else {
            let parent_node = graph
                .node(&edge.parent)
                .ok_or_else(|| SolveError::UnknownNode(edge.parent.clone()))?;
            let placed = partial.get(&edge.parent).ok_or_else(|| SolveError::ParentUnplaced {
                node: node_id.to_string(),
                parent: edge.parent.clone(),
            })?;
            let parent = PlacedParent {
                center: placed.position,
                half: placed.rotation.world_half_extents(parent_node.size),
                rotation: placed.rotation,
            };
            // Keep this node's cluster inside the parent's.
            if let Some(pcs) = parent_node.cluster_extents.map(|c| c.to_world(placed.rotation)) {
                let c = parent.center;
                axes[0] = axes[0].intersect(&Interval::new(
                    c.x - pcs.x_neg + cs.x_neg,
                    c.x + pcs.x_pos - cs.x_pos,
                ));
                axes[1] = axes[1].intersect(&Interval::new(
                    c.y - pcs.y_neg + cs.y_neg,
                    c.y + pcs.y_pos - cs.y_pos,
                ));
            }
            if edge.preposition.is_lateral() && lateral_floor.is_none() {
                lateral_floor = Some(parent.center.z - parent.half.z);
            }
            object_edge_box(edge, &parent, h, &room, config)
        };
        for (i, iv) in eb.axes.iter().enumerate() {
            if let Some(iv) = iv {
                axes[i] = axes[i].intersect(iv);
                if i == 2 {
                    z_fixed = true;
                }
            }
        }
    }
    if !z_fixed {
        let bottom = lateral_floor.unwrap_or(0.0);
        axes[2] = axes[2].intersect(&Interval::point(bottom + h.z));
    }
    Ok(FeasibleRegion {
        x: axes[0].normalized(),
        y: axes[1].normalized(),
        z: axes[2].normalized(),
    })
}
