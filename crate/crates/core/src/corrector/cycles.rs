use std::collections::{BTreeMap, BTreeSet};

use crate::scene::{cyclic_components, Edge, SceneGraph};

/// Components with at most this many internal edges get an exact search.
const EXACT_LIMIT: usize = 16;

/// Removes edges until the graph is acyclic and returns the removed edges.
///
/// Each cyclic component loses a smallest set of its internal edges, picking
/// the most recently added edges among equally small sets. Components with
/// more than 16 internal edges instead drop their latest edge repeatedly.
/// Every removed edge lies on a cycle of the input.
pub fn break_cycles(graph: &SceneGraph) -> (SceneGraph, Vec<Edge>) {
    let mut g = graph.clone();
    let mut removed = Vec::new();
    loop {
        let components = cyclic_components(&g);
        let Some(comp) = components.first() else { break };
        let members: BTreeSet<&str> = comp.iter().map(String::as_str).collect();
        // Internal edges, latest first.
        let internal: Vec<usize> = (0..g.edges.len())
            .rev()
            .filter(|&i| {
                members.contains(g.edges[i].parent.as_str()) && members.contains(g.edges[i].child.as_str())
            })
            .collect();
        let mut cut = if internal.len() <= EXACT_LIMIT {
            smallest_cut(&g.edges, &internal)
        } else {
            vec![internal[0]]
        };
        cut.sort_unstable_by(|a, b| b.cmp(a));
        for i in cut {
            removed.push(g.edges.remove(i));
        }
    }
    removed.reverse();
    (g, removed)
}

/// Smallest subset of `internal` whose removal makes those edges acyclic.
/// Subsets are tried in lexicographic order over `internal`.
fn smallest_cut(edges: &[Edge], internal: &[usize]) -> Vec<usize> {
    let m = internal.len();
    for k in 1..=m {
        let mut pick: Vec<usize> = (0..k).collect();
        loop {
            let kept: Vec<&Edge> = (0..m)
                .filter(|i| !pick.contains(i))
                .map(|i| &edges[internal[i]])
                .collect();
            if acyclic(&kept) {
                return pick.iter().map(|&i| internal[i]).collect();
            }
            // Next k-combination.
            let mut j = k;
            while j > 0 && pick[j - 1] == m - k + j - 1 {
                j -= 1;
            }
            if j == 0 {
                break;
            }
            pick[j - 1] += 1;
            for t in j..k {
                pick[t] = pick[t - 1] + 1;
            }
        }
    }
    internal.to_vec()
}

fn acyclic(edges: &[&Edge]) -> bool {
    let mut indeg: BTreeMap<&str, usize> = BTreeMap::new();
    for e in edges {
        indeg.entry(e.parent.as_str()).or_default();
        *indeg.entry(e.child.as_str()).or_default() += 1;
    }
    let mut ready: Vec<&str> = indeg.iter().filter(|(_, &d)| d == 0).map(|(k, _)| *k).collect();
    let mut seen = 0;
    while let Some(v) = ready.pop() {
        seen += 1;
        for e in edges.iter().filter(|e| e.parent == v) {
            let d = indeg.get_mut(e.child.as_str()).expect("counted");
            *d -= 1;
            if *d == 0 {
                ready.push(e.child.as_str());
            }
        }
    }
    seen == indeg.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Adjacency::*, ObjectNode, Preposition::*, Room, Size3};

    #[test]
    fn desk_ornament_triangle() {
        let g = SceneGraph::new(Room::new(4.0, 4.0, 2.5))
            .with_node(ObjectNode::new("desk_1", "desk", Size3::new(1.2, 0.6, 0.75)))
            .with_node(ObjectNode::new("lamp_1", "lamp", Size3::new(0.2, 0.2, 0.4)))
            .with_node(ObjectNode::new("vase_1", "vase", Size3::new(0.2, 0.2, 0.3)))
            .with_edge("floor", "desk_1", On, Adjacent)
            .with_edge("desk_1", "lamp_1", On, Adjacent)
            .with_edge("lamp_1", "vase_1", LeftOf, Adjacent)
            .with_edge("vase_1", "desk_1", RightOf, Adjacent);
        let (out, removed) = break_cycles(&g);
        assert_eq!(removed, vec![Edge::new("vase_1", "desk_1", RightOf, Adjacent)]);
        assert!(cyclic_components(&out).is_empty());
    }

    #[test]
    fn acyclic_graph_untouched() {
        let g = SceneGraph::new(Room::new(4.0, 4.0, 2.5))
            .with_node(ObjectNode::new("desk_1", "desk", Size3::new(1.2, 0.6, 0.75)))
            .with_edge("floor", "desk_1", On, Adjacent);
        let (out, removed) = break_cycles(&g);
        assert_eq!(out, g);
        assert!(removed.is_empty());
    }
}
