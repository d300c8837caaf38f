//! Independent checks of a finished layout.
//!
//! Each edge predicate is written directly against the placed boxes rather
//! than through the region code the sampler uses, so a bug in one does not
//! hide in the other.

use serde::Serialize;

use crate::scene::{
    Aabb, Adjacency, Axis, Dir2, Edge, LayoutElement, Preposition, SceneGraph, Vec3,
};

use super::{Layout, SolverConfig};

const TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum LayoutDefect {
    Unplaced { node: String },
    OutOfRoom { node: String },
    Collision { a: String, b: String, volume: f64 },
    EdgeViolated { edge: String, reason: String },
    ClusterEscape { node: String, descendant: String },
}

fn bbox(graph: &SceneGraph, layout: &Layout, id: &str) -> Option<Aabb> {
    let node = graph.node(id)?;
    let p = layout.placements.get(id)?;
    Some(Aabb::of_object(p.position, node.size, p.rotation))
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

fn span_within(inner: &Aabb, outer: &Aabb, axis: Axis) -> bool {
    inner.min.get(axis) >= outer.min.get(axis) - TOL && inner.max.get(axis) <= outer.max.get(axis) + TOL
}

/// Signed distance from `parent`'s face on `side` to `child`'s opposite face.
fn face_gap(parent: &Aabb, child: &Aabb, side: Dir2) -> f64 {
    let a = side.axis();
    if side.sign() > 0.0 {
        child.min.get(a) - parent.max.get(a)
    } else {
        parent.min.get(a) - child.max.get(a)
    }
}

fn wall_gap(b: &Aabb, room: &Aabb, wall: Dir2) -> f64 {
    let a = wall.axis();
    if wall.sign() > 0.0 {
        room.max.get(a) - b.max.get(a)
    } else {
        b.min.get(a) - room.min.get(a)
    }
}

fn check_edge(
    edge: &Edge,
    graph: &SceneGraph,
    layout: &Layout,
    config: &SolverConfig,
) -> Result<(), String> {
    let child = bbox(graph, layout, &edge.child).ok_or("child not placed")?;
    let room = graph.room.bounds();
    if let Some(element) = LayoutElement::from_id(&edge.parent) {
        if edge.preposition == Preposition::InTheCorner {
            let walls: Vec<Dir2> = graph
                .inbound(&edge.child)
                .filter(|e| e.preposition == Preposition::InTheCorner)
                .filter_map(|e| LayoutElement::from_id(&e.parent).and_then(|l| l.wall_normal()))
                .collect();
            let x_wall = walls.iter().copied().find(|w| w.axis() == Axis::X).unwrap_or(Dir2::NegX);
            let y_wall = walls.iter().copied().find(|w| w.axis() != Axis::X).unwrap_or(Dir2::NegY);
            for w in [x_wall, y_wall] {
                let g = wall_gap(&child, &room, w);
                if g < -TOL || g > config.adjacency_gap + TOL {
                    return Err(format!("gap {g:.4} to the {w:?} wall"));
                }
            }
            return Ok(());
        }
        return match element {
            LayoutElement::Floor => near(child.min.z, 0.0)
                .then_some(())
                .ok_or_else(|| "not resting on the floor".to_string()),
            LayoutElement::Ceiling => near(child.max.z, room.max.z)
                .then_some(())
                .ok_or_else(|| "not touching the ceiling".to_string()),
            LayoutElement::MiddleOfRoom => {
                let c = child.center();
                let ((x0, x1), (y0, y1)) = graph.room.middle_region();
                let inside = c.x >= x0 - TOL && c.x <= x1 + TOL && c.y >= y0 - TOL && c.y <= y1 + TOL;
                if !inside {
                    Err("center outside the middle region".into())
                } else if !near(child.min.z, 0.0) {
                    Err("not resting on the floor".into())
                } else {
                    Ok(())
                }
            }
            wall => {
                let normal = wall.wall_normal().expect("walls have normals");
                let g = wall_gap(&child, &room, normal);
                if g.abs() > TOL {
                    Err(format!("back face {g:.4} m from the wall"))
                } else {
                    Ok(())
                }
            }
        };
    }

    let parent = bbox(graph, layout, &edge.parent).ok_or("parent not placed")?;
    match edge.preposition {
        Preposition::On => {
            if !near(child.min.z, parent.max.z) {
                return Err("bottom not on the parent's top".into());
            }
            if !(span_within(&child, &parent, Axis::X) && span_within(&child, &parent, Axis::Y)) {
                return Err("footprint leaves the parent's top".into());
            }
            Ok(())
        }
        Preposition::Under => {
            if child.max.z > parent.min.z + TOL || !near(child.min.z, 0.0) {
                return Err("not below the parent on the floor".into());
            }
            if !(span_within(&child, &parent, Axis::X) && span_within(&child, &parent, Axis::Y)) {
                return Err("footprint leaves the parent's footprint".into());
            }
            Ok(())
        }
        Preposition::Above => {
            let c = child.center();
            if child.min.z < parent.max.z - TOL {
                return Err("bottom below the parent's top".into());
            }
            let over = c.x >= parent.min.x - TOL
                && c.x <= parent.max.x + TOL
                && c.y >= parent.min.y - TOL
                && c.y <= parent.max.y + TOL;
            over.then_some(()).ok_or_else(|| "not over the parent".into())
        }
        p => {
            let rotation = layout.placements[&edge.parent].rotation;
            let side = rotation.to_world(p.local_side().expect("lateral"));
            let gap = face_gap(&parent, &child, side);
            let (lo, hi) = match edge.adjacency {
                Adjacency::Adjacent => (0.0, config.adjacency_gap),
                Adjacency::NotAdjacent => config.nonadjacent_range,
            };
            if gap < lo - TOL || gap > hi + TOL {
                return Err(format!("face gap {gap:.4} outside [{lo}, {hi}]"));
            }
            let across = side.lateral_axis();
            let ok = span_within(&child, &parent, across) || span_within(&parent, &child, across);
            ok.then_some(())
                .ok_or_else(|| "facing spans are not nested".to_string())
        }
    }
}

/// Every defect of a solved layout: unplaced or out-of-room objects,
/// unsanctioned overlaps and violated edges.
pub fn verify_layout(graph: &SceneGraph, layout: &Layout, config: &SolverConfig) -> Vec<LayoutDefect> {
    let mut out = Vec::new();
    let room = graph.room.bounds();
    let mut boxes: Vec<(&str, Aabb)> = Vec::new();
    for n in &graph.nodes {
        match bbox(graph, layout, &n.id) {
            Some(b) => {
                if !b.within(&room, TOL) {
                    out.push(LayoutDefect::OutOfRoom { node: n.id.clone() });
                }
                boxes.push((n.id.as_str(), b));
            }
            None => out.push(LayoutDefect::Unplaced { node: n.id.clone() }),
        }
    }
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            let v = boxes[i].1.intersection_volume(&boxes[j].1);
            if v > config.contact_tolerance {
                out.push(LayoutDefect::Collision {
                    a: boxes[i].0.to_string(),
                    b: boxes[j].0.to_string(),
                    volume: v,
                });
            }
        }
    }
    for e in &graph.edges {
        if let Err(reason) = check_edge(e, graph, layout, config) {
            out.push(LayoutDefect::EdgeViolated {
                edge: e.to_string(),
                reason,
            });
        }
    }
    out
}

/// Descendants whose boxes leave their ancestor's cluster box
/// `[center - cs_neg, center + cs_pos]` on x or y. Needs cluster extents on
/// every node of `graph`.
pub fn cluster_containment_violations(graph: &SceneGraph, layout: &Layout) -> Vec<LayoutDefect> {
    let mut out = Vec::new();
    for n in &graph.nodes {
        let (Some(cs), Some(p)) = (n.cluster_extents, layout.placements.get(&n.id)) else {
            continue;
        };
        let w = cs.to_world(p.rotation);
        let lo = Vec3::new(p.position.x - w.x_neg, p.position.y - w.y_neg, 0.0);
        let hi = Vec3::new(p.position.x + w.x_pos, p.position.y + w.y_pos, 0.0);
        let mut stack: Vec<&str> = graph.outbound(&n.id).map(|e| e.child.as_str()).collect();
        let mut seen = std::collections::BTreeSet::new();
        while let Some(d) = stack.pop() {
            if !seen.insert(d) {
                continue;
            }
            stack.extend(graph.outbound(d).map(|e| e.child.as_str()));
            let Some(b) = bbox(graph, layout, d) else { continue };
            let inside = b.min.x >= lo.x - TOL
                && b.max.x <= hi.x + TOL
                && b.min.y >= lo.y - TOL
                && b.max.y <= hi.y + TOL;
            if !inside {
                out.push(LayoutDefect::ClusterEscape {
                    node: n.id.clone(),
                    descendant: d.to_string(),
                });
            }
        }
    }
    out
}
