use serde::Serialize;

use crate::scene::{
    is_layout_id, validate_graph, Adjacency, Edge, LayoutElement, Preposition, SceneGraph,
};

use super::detect::{detect_violations, flush_walls};
use super::{
    CorrectionAdvisor, CorrectionRecord, CorrectionSource, EdgeProposal, GraphChange, Violation,
    ViolationKind,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolution {
    #[serde(skip)]
    pub graph: SceneGraph,
    pub log: Vec<CorrectionRecord>,
}

/// The object a correction relocates.
fn add_edge(g: &mut SceneGraph, e: Edge, changes: &mut Vec<GraphChange>) {
    if g.edges.iter().any(|x| x.parent == e.parent && x.child == e.child) {
        return;
    }
    changes.push(GraphChange::EdgeAdded { edge: e.to_string() });
    g.edges.push(e);
}

fn remove_edges(g: &mut SceneGraph, keep: impl Fn(&Edge) -> bool, changes: &mut Vec<GraphChange>) {
    let mut kept = Vec::with_capacity(g.edges.len());
    for e in g.edges.drain(..) {
        if keep(&e) {
            kept.push(e);
        } else {
            changes.push(GraphChange::EdgeRemoved { edge: e.to_string() });
        }
    }
    g.edges = kept;
}

fn remove_node(g: &mut SceneGraph, id: &str, changes: &mut Vec<GraphChange>) {
    remove_edges(g, |e| e.parent != id && e.child != id, changes);
    if g.remove_node(id).is_some() {
        changes.push(GraphChange::NodeRemoved { node: id.to_string() });
    }
}

/// Lateral alternatives tried for a child pushed into a wall: the two
/// perpendicular sides first, then the opposite side.
fn lateral_alternatives(p: Preposition) -> [Preposition; 3] {
    use Preposition::*;
    match p {
        InFront => [LeftOf, RightOf, Behind],
        Behind => [LeftOf, RightOf, InFront],
        LeftOf => [InFront, Behind, RightOf],
        _ => [InFront, Behind, LeftOf],
    }
}

fn fix_out_of_bounds(g: &mut SceneGraph, v: &Violation, changes: &mut Vec<GraphChange>) {
    let parent = v.context[0].clone();
    let blocked = flush_walls(g, &parent);
    let rotation = match g.node(&parent) {
        Some(n) => n.rotation,
        None => return,
    };
    for i in 0..g.edges.len() {
        let e = &g.edges[i];
        if e.parent != parent || e.child != v.subject || !e.preposition.is_lateral() {
            continue;
        }
        let side = rotation.to_world(e.preposition.local_side().expect("lateral"));
        if !blocked.contains(&side) {
            continue;
        }
        let choice = lateral_alternatives(e.preposition).into_iter().find(|p| {
            !blocked.contains(&rotation.to_world(p.local_side().expect("lateral")))
        });
        if let Some(p) = choice {
            let old = e.to_string();
            g.edges[i].preposition = p;
            changes.push(GraphChange::EdgeReplaced {
                old,
                new: g.edges[i].to_string(),
            });
        }
    }
}

fn fix_adjacency(g: &mut SceneGraph, v: &Violation, changes: &mut Vec<GraphChange>) {
    let (a, b) = (v.context[0].clone(), v.context[1].clone());
    let vertical = g
        .edges
        .iter()
        .any(|e| e.parent == a && e.child == b && e.preposition == Preposition::On);
    if vertical {
        let b_has_other = g.inbound(&b).any(|e| e.parent != a);
        if b_has_other {
            remove_edges(g, |e| !(e.parent == a && e.child == b), changes);
        } else {
            let c = v.subject.clone();
            remove_edges(
                g,
                |e| !((e.parent == a && e.child == c) || (e.parent == c && e.child == a)),
                changes,
            );
        }
        return;
    }
    for e in g.edges.iter_mut() {
        if e.parent == a && e.child == b && e.adjacency == Adjacency::Adjacent {
            let old = e.to_string();
            e.adjacency = Adjacency::NotAdjacent;
            changes.push(GraphChange::EdgeReplaced {
                old,
                new: e.to_string(),
            });
        }
    }
}

fn fix_size(g: &mut SceneGraph, v: &Violation, changes: &mut Vec<GraphChange>) {
    let parent = v.subject.clone();
    let x = v.mover().to_string();
    if parent == "floor" {
        remove_node(g, &x, changes);
        return;
    }
    if let Some(wall) = LayoutElement::from_id(&parent).filter(|l| l.is_wall()) {
        remove_edges(g, |e| !(e.parent == wall.id() && e.child == x), changes);
        add_edge(g, Edge::new("floor", &x, Preposition::On, Adjacency::Adjacent), changes);
        return;
    }
    let removed: Vec<Edge> = g
        .edges
        .iter()
        .filter(|e| e.parent == parent && e.child == x)
        .cloned()
        .collect();
    remove_edges(g, |e| !(e.parent == parent && e.child == x), changes);
    let Some(up) = g.inbound(&parent).next().cloned() else { return };
    let template = removed.first();
    match LayoutElement::from_id(&up.parent) {
        Some(l) if l.is_wall() => {
            add_edge(g, Edge::new(l.id(), &x, Preposition::On, Adjacency::Adjacent), changes);
            add_edge(g, Edge::new("floor", &x, Preposition::On, Adjacency::Adjacent), changes);
        }
        Some(l) => {
            add_edge(g, Edge::new(l.id(), &x, Preposition::On, Adjacency::Adjacent), changes);
        }
        None => {
            let (p, adj) = template
                .map(|t| (t.preposition, t.adjacency))
                .unwrap_or((Preposition::On, Adjacency::Adjacent));
            add_edge(g, Edge::new(&up.parent, &x, p, adj), changes);
        }
    }
}

fn fix_orphan(g: &mut SceneGraph, v: &Violation, changes: &mut Vec<GraphChange>) {
    add_edge(
        g,
        Edge::new("middle_of_room", &v.subject, Preposition::On, Adjacency::Adjacent),
        changes,
    );
}

fn fallback(g: &mut SceneGraph, v: &Violation) -> Vec<GraphChange> {
    let mut changes = Vec::new();
    match v.kind {
        ViolationKind::OutOfBounds => fix_out_of_bounds(g, v, &mut changes),
        ViolationKind::AdjacencyConflict => fix_adjacency(g, v, &mut changes),
        ViolationKind::SizeIncompatibility => fix_size(g, v, &mut changes),
        ViolationKind::Orphan => fix_orphan(g, v, &mut changes),
    }
    changes
}

/// Applies an advisor proposal if it is well formed and clears the violation.
fn try_proposal(
    g: &SceneGraph,
    v: &Violation,
    proposal: &EdgeProposal,
) -> Result<(SceneGraph, Vec<GraphChange>), String> {
    let who = v.mover();
    if proposal.inbound.is_empty() {
        return Err("proposal has no placement".into());
    }
    if let Some(bad) = proposal.inbound.iter().find(|e| e.child != who) {
        return Err(format!("proposal edge {bad} does not place {who}"));
    }
    let mut next = g.clone();
    let mut changes = Vec::new();
    remove_edges(&mut next, |e| e.child != who, &mut changes);
    for e in &proposal.inbound {
        if !next.contains(&e.parent) {
            return Err(format!("unknown parent {}", e.parent));
        }
        add_edge(&mut next, e.clone(), &mut changes);
    }
    if let Some(r) = proposal.rotation {
        let node = next.node_mut(who).ok_or("unknown node")?;
        if node.rotation != r {
            node.rotation = r;
            changes.push(GraphChange::NodeRotated {
                node: who.to_string(),
                degrees: r.degrees(),
            });
        }
    }
    let report = validate_graph(&next);
    if !report.is_empty() {
        return Err(format!("proposal breaks the graph: {}", report.errors[0]));
    }
    let after = detect_violations(&next);
    if after.iter().any(|x| x.kind == v.kind && x.subject == v.subject) {
        return Err("proposal does not clear the violation".into());
    }
    if after.len() >= detect_violations(g).len() {
        return Err("proposal introduces other violations".into());
    }
    Ok((next, changes))
}

/// Rewrites the graph until none of the four violation kinds remain.
///
/// Violations are handled one at a time, re-detecting after each change.
/// An advisor, when given, is asked first; its proposal is used only if it
/// validates and clears the violation. If the step budget runs out, the
/// objects still involved are removed. An empty `violations` list returns
/// the graph unchanged.
pub fn resolve_violations(
    graph: &SceneGraph,
    violations: &[Violation],
    advisor: Option<&dyn CorrectionAdvisor>,
) -> Resolution {
    let mut g = graph.clone();
    let mut log = Vec::new();
    if violations.is_empty() {
        return Resolution { graph: g, log };
    }
    let budget = 4 * (g.nodes.len() + g.edges.len()) + 16;
    let mut steps = 0;
    loop {
        let current = detect_violations(&g);
        let Some(v) = current.first().cloned() else { break };
        if steps >= budget {
            let victim = v.mover().to_string();
            let mut changes = Vec::new();
            if is_layout_id(&victim) {
                break;
            }
            remove_node(&mut g, &victim, &mut changes);
            log.push(CorrectionRecord {
                violation: v,
                source: CorrectionSource::LastResort,
                changes,
                advisor_note: None,
            });
            continue;
        }
        steps += 1;
        let mut note = None;
        if let Some(advisor) = advisor {
            match advisor
                .propose_fix(&g, &v)
                .and_then(|p| try_proposal(&g, &v, &p))
            {
                Ok((next, changes)) => {
                    g = next;
                    log.push(CorrectionRecord {
                        violation: v,
                        source: CorrectionSource::Advisor,
                        changes,
                        advisor_note: None,
                    });
                    continue;
                }
                Err(why) => note = Some(why),
            }
        }
        let mut changes = fallback(&mut g, &v);
        let mut source = CorrectionSource::Fallback;
        if changes.is_empty() {
            let victim = v.mover().to_string();
            if is_layout_id(&victim) {
                break;
            }
            remove_node(&mut g, &victim, &mut changes);
            source = CorrectionSource::LastResort;
        }
        log.push(CorrectionRecord {
            violation: v,
            source,
            changes,
            advisor_note: note,
        });
    }
    Resolution { graph: g, log }
}
