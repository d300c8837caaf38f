use std::collections::{BTreeMap, BTreeSet};

use crate::scene::{
    is_layout_id, Adjacency, Axis, Dir2, Edge, LayoutElement, Preposition, SceneGraph,
};
use crate::solver::placement::flush_sides;

use super::{Side, Violation, ViolationKind};

const EPS: f64 = 1e-9;

/// World sides on which `id` sits flush against a wall: walls it is "on",
/// and both walls of its corner if it is "in the corner".
pub fn flush_walls(graph: &SceneGraph, id: &str) -> BTreeSet<Dir2> {
    flush_sides(graph, id)
}

/// World side of the child for an object-to-object edge.
pub(crate) fn edge_side(graph: &SceneGraph, e: &Edge) -> Option<Side> {
    let parent = graph.node(&e.parent)?;
    match e.preposition {
        Preposition::On | Preposition::Above => Some(Side::Up),
        Preposition::Under => Some(Side::Down),
        p => p
            .local_side()
            .map(|s| Side::Flat(parent.rotation.to_world(s))),
    }
}

fn out_of_bounds(graph: &SceneGraph, out: &mut Vec<Violation>) {
    for e in &graph.edges {
        if !e.preposition.is_lateral() || graph.node(&e.parent).is_none() {
            continue;
        }
        let Some(Side::Flat(side)) = edge_side(graph, e) else { continue };
        if flush_walls(graph, &e.parent).contains(&side) {
            let wall = LayoutElement::wall_toward(side).id();
            out.push(Violation {
                kind: ViolationKind::OutOfBounds,
                subject: e.child.clone(),
                context: vec![e.parent.clone(), wall.to_string()],
                message: format!(
                    "{} is {} {}, which stands against {}",
                    e.child, e.preposition, e.parent, wall
                ),
            });
        }
    }
}

fn adjacency_conflicts(graph: &SceneGraph, out: &mut Vec<Violation>) {
    // (x, y, side): x lies on `side` of y.
    let mut rel: BTreeSet<(&str, &str, Side)> = BTreeSet::new();
    for e in &graph.edges {
        if let Some(side) = edge_side(graph, e) {
            rel.insert((e.child.as_str(), e.parent.as_str(), side));
            rel.insert((e.parent.as_str(), e.child.as_str(), side.opposite()));
        }
    }
    let ids: Vec<&str> = graph.nodes.iter().map(|n| n.id.as_str()).collect();
    for e in &graph.edges {
        if e.adjacency != Adjacency::Adjacent
            || !(e.preposition.is_lateral() || e.preposition == Preposition::On)
        {
            continue;
        }
        let Some(side) = edge_side(graph, e) else { continue };
        let (a, b) = (e.parent.as_str(), e.child.as_str());
        for &c in &ids {
            if c == a || c == b {
                continue;
            }
            if rel.contains(&(c, a, side)) && rel.contains(&(b, c, side)) {
                out.push(Violation {
                    kind: ViolationKind::AdjacencyConflict,
                    subject: c.to_string(),
                    context: vec![a.to_string(), b.to_string()],
                    message: format!("{c} sits between {a} and {b}, which are declared adjacent"),
                });
            }
        }
    }
}

fn extent(graph: &SceneGraph, id: &str, axis: Axis) -> f64 {
    graph.node(id).map(|n| 2.0 * n.half_extents().get(axis)).unwrap_or(0.0)
}

/// True when the object stands on the floor (directly or in a floor corner).
fn rests_on_floor(graph: &SceneGraph, id: &str) -> bool {
    graph.inbound(id).any(|e| match LayoutElement::from_id(&e.parent) {
        Some(LayoutElement::Floor) | Some(LayoutElement::MiddleOfRoom) => true,
        Some(l) if l.is_wall() => e.preposition == Preposition::InTheCorner,
        _ => false,
    })
}

fn size_violation(parent: &str, children: &BTreeSet<&str>, message: String) -> Violation {
    Violation {
        kind: ViolationKind::SizeIncompatibility,
        subject: parent.to_string(),
        context: children.iter().map(|s| s.to_string()).collect(),
        message,
    }
}

fn size_incompatibility(graph: &SceneGraph, out: &mut Vec<Violation>) {
    // Object parents: adjacent lateral children per side, and children on top / underneath.
    for parent in &graph.nodes {
        let pid = parent.id.as_str();
        let mut lateral: BTreeMap<Dir2, BTreeSet<&str>> = BTreeMap::new();
        let mut on: BTreeSet<&str> = BTreeSet::new();
        let mut under: BTreeSet<&str> = BTreeSet::new();
        for e in graph.outbound(pid) {
            if graph.node(&e.child).is_none() {
                continue;
            }
            match (edge_side(graph, e), e.preposition) {
                (Some(Side::Flat(d)), _) if e.adjacency == Adjacency::Adjacent => {
                    lateral.entry(d).or_default().insert(&e.child);
                }
                (_, Preposition::On) => {
                    on.insert(&e.child);
                }
                (_, Preposition::Under) => {
                    under.insert(&e.child);
                }
                _ => {}
            }
        }
        for (side, kids) in &lateral {
            if kids.len() < 2 {
                continue;
            }
            let along = side.lateral_axis();
            let need: f64 = kids.iter().map(|k| extent(graph, k, along)).sum();
            let have = extent(graph, pid, along);
            if need > have + EPS {
                out.push(size_violation(
                    pid,
                    kids,
                    format!(
                        "{} objects need {need:.2} m along the {:?} face of {pid}, which is {have:.2} m",
                        kids.len(),
                        side
                    ),
                ));
            }
        }
        let row = parent.rotation.right().axis();
        let cross = if row == Axis::X { Axis::Y } else { Axis::X };
        for (kids, word) in [(&on, "on"), (&under, "under")] {
            if kids.is_empty() {
                continue;
            }
            let need: f64 = kids.iter().map(|k| extent(graph, k, row)).sum();
            let widest = kids
                .iter()
                .map(|k| extent(graph, k, cross))
                .fold(0.0, f64::max);
            let (have_row, have_cross) = (extent(graph, pid, row), extent(graph, pid, cross));
            if need > have_row + EPS || widest > have_cross + EPS {
                out.push(size_violation(
                    pid,
                    kids,
                    format!("objects {word} {pid} need {need:.2} x {widest:.2} m, it offers {have_row:.2} x {have_cross:.2} m"),
                ));
            } else if word == "under" && rests_on_floor(graph, pid) {
                out.push(size_violation(
                    pid,
                    kids,
                    format!("{pid} stands on the floor and leaves no room underneath"),
                ));
            }
        }
    }

    // Walls: total face area of the objects hung on them.
    let room = graph.room;
    for wall in LayoutElement::ALL.into_iter().filter(|l| l.is_wall()) {
        let normal = wall.wall_normal().expect("wall");
        let along = normal.lateral_axis();
        let length = if along == Axis::X { room.width_x } else { room.depth_y };
        let kids: BTreeSet<&str> = graph
            .outbound(wall.id())
            .filter(|e| e.preposition == Preposition::On && graph.node(&e.child).is_some())
            .map(|e| e.child.as_str())
            .collect();
        if kids.is_empty() {
            continue;
        }
        let area: f64 = kids
            .iter()
            .map(|k| extent(graph, k, along) * extent(graph, k, Axis::Z))
            .sum();
        let too_big = kids.iter().any(|k| {
            extent(graph, k, along) > length + EPS || extent(graph, k, Axis::Z) > room.height_z + EPS
        });
        if too_big || area > length * room.height_z + EPS {
            out.push(size_violation(
                wall.id(),
                &kids,
                format!("objects on {} cover {area:.2} m², the wall has {:.2} m²", wall.id(), length * room.height_z),
            ));
        }
    }

    // Floor: total footprint of everything standing on it.
    let floor_kids: BTreeSet<&str> = graph
        .edges
        .iter()
        .filter(|e| {
            e.preposition == Preposition::On
                && matches!(e.parent.as_str(), "floor" | "middle_of_room")
                && graph.node(&e.child).is_some()
        })
        .map(|e| e.child.as_str())
        .collect();
    let area: f64 = floor_kids
        .iter()
        .map(|k| extent(graph, k, Axis::X) * extent(graph, k, Axis::Y))
        .sum();
    if area > room.width_x * room.depth_y + EPS {
        out.push(size_violation(
            "floor",
            &floor_kids,
            format!("floor objects cover {area:.2} m², the room has {:.2} m²", room.width_x * room.depth_y),
        ));
    }
}

fn orphans(graph: &SceneGraph, out: &mut Vec<Violation>) {
    for n in &graph.nodes {
        if graph.inbound(&n.id).next().is_none() {
            out.push(Violation {
                kind: ViolationKind::Orphan,
                subject: n.id.clone(),
                context: Vec::new(),
                message: format!("{} has no placement", n.id),
            });
        }
    }
}

/// Every implausibility in the graph, sorted by kind then subject.
pub fn detect_violations(graph: &SceneGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    out_of_bounds(graph, &mut out);
    adjacency_conflicts(graph, &mut out);
    size_incompatibility(graph, &mut out);
    orphans(graph, &mut out);
    out.retain(|v| v.context.iter().all(|c| is_layout_id(c) || graph.node(c).is_some()));
    out.sort();
    out.dedup();
    out
}
