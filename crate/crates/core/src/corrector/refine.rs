use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::scene::{
    is_layout_id, topological_order, validate_graph, Adjacency, Dir2, Edge, Preposition, SceneGraph,
};

use super::{CorrectionSource, OrderingAdvisor};

/// Children that share a parent, preposition and adjacency.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SiblingGroup {
    pub parent: String,
    pub preposition: Preposition,
    pub adjacency: Adjacency,
    /// Sorted by id.
    pub children: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupOrdering {
    pub group: SiblingGroup,
    pub source: CorrectionSource,
    pub edges: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advisor_note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Refinement {
    #[serde(skip)]
    pub graph: SceneGraph,
    pub added: Vec<String>,
    pub groups: Vec<GroupOrdering>,
}

/// Groups of two or more children under the same object parent.
pub fn sibling_groups(graph: &SceneGraph) -> Vec<SiblingGroup> {
    let mut map: BTreeMap<(String, Preposition, bool), BTreeSet<String>> = BTreeMap::new();
    for e in &graph.edges {
        if is_layout_id(&e.parent) {
            continue;
        }
        map.entry((e.parent.clone(), e.preposition, e.adjacency == Adjacency::Adjacent))
            .or_default()
            .insert(e.child.clone());
    }
    map.into_iter()
        .filter(|(_, kids)| kids.len() >= 2)
        .map(|((parent, preposition, adj), kids)| SiblingGroup {
            parent,
            preposition,
            adjacency: if adj {
                Adjacency::Adjacent
            } else {
                Adjacency::NotAdjacent
            },
            children: kids.into_iter().collect(),
        })
        .collect()
}

/// Whether edges among `children` already chain them into a total order.
fn totally_ordered(graph: &SceneGraph, children: &[String]) -> bool {
    let idx: BTreeMap<&str, usize> = children
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let n = children.len();
    let mut adj = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for e in &graph.edges {
        if let (Some(&a), Some(&b)) = (idx.get(e.parent.as_str()), idx.get(e.child.as_str())) {
            adj[a].push(b);
            indeg[b] += 1;
        }
    }
    // Longest path over the induced subgraph; a Hamiltonian path means a
    // total order.
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut longest = vec![1usize; n];
    let mut seen = 0;
    while let Some(v) = ready.pop() {
        seen += 1;
        for &w in &adj[v] {
            longest[w] = longest[w].max(longest[v] + 1);
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push(w);
            }
        }
    }
    seen == n && longest.iter().copied().max() == Some(n)
}

/// World direction along which the group is lined up.
fn row_direction(graph: &SceneGraph, group: &SiblingGroup) -> Option<Dir2> {
    let parent = graph.node(&group.parent)?;
    let local = match group.preposition {
        Preposition::LeftOf | Preposition::RightOf => Dir2::PosY,
        _ => Dir2::PosX,
    };
    Some(parent.rotation.to_world(local))
}

fn fallback_chain(graph: &SceneGraph, group: &SiblingGroup) -> Vec<Edge> {
    let Some(dir) = row_direction(graph, group) else { return Vec::new() };
    // Chaining in topological order never closes a cycle.
    let mut order = group.children.clone();
    if let Ok(topo) = topological_order(graph) {
        let rank: BTreeMap<&str, usize> =
            topo.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        order.sort_by_key(|id| rank.get(id.as_str()).copied());
    }
    order
        .windows(2)
        .filter_map(|pair| {
            let first = graph.node(&pair[0])?;
            let prep = Preposition::from_local_side(first.rotation.to_local(dir));
            Some(Edge::new(&pair[0], &pair[1], prep, Adjacency::Adjacent))
        })
        .collect()
}

fn with_edges(graph: &SceneGraph, edges: &[Edge]) -> (SceneGraph, Vec<Edge>) {
    let mut g = graph.clone();
    let mut added = Vec::new();
    for e in edges {
        if g.edges.iter().any(|x| x.parent == e.parent && x.child == e.child) {
            continue;
        }
        g.edges.push(e.clone());
        added.push(e.clone());
    }
    (g, added)
}

fn check_proposal(
    graph: &SceneGraph,
    group: &SiblingGroup,
    edges: &[Edge],
) -> Result<(SceneGraph, Vec<Edge>), String> {
    let members: BTreeSet<&str> = group.children.iter().map(String::as_str).collect();
    if let Some(e) = edges
        .iter()
        .find(|e| !members.contains(e.parent.as_str()) || !members.contains(e.child.as_str()))
    {
        return Err(format!("edge {e} leaves the group"));
    }
    if let Some(e) = edges.iter().find(|e| !e.preposition.is_lateral()) {
        return Err(format!("edge {e} is not lateral"));
    }
    let (g, added) = with_edges(graph, edges);
    let report = validate_graph(&g);
    if !report.is_empty() {
        return Err(format!("ordering breaks the graph: {}", report.errors[0]));
    }
    if !totally_ordered(&g, &group.children) {
        return Err("ordering leaves siblings unordered".into());
    }
    Ok((g, added))
}

/// Adds sibling-to-sibling edges so that every group of children sharing a
/// parent and relation is totally ordered.
///
/// Without an advisor, or when its proposal fails the check, children are
/// chained in topological order (ties by id) along the free axis of the parent: front to back for
/// left/right groups, left to right otherwise. New edges are appended after
/// the existing ones.
pub fn refine_siblings(graph: &SceneGraph, advisor: Option<&dyn OrderingAdvisor>) -> Refinement {
    let mut g = graph.clone();
    let mut added = Vec::new();
    let mut groups = Vec::new();
    for group in sibling_groups(graph) {
        if totally_ordered(&g, &group.children) {
            continue;
        }
        let mut note = None;
        if let Some(advisor) = advisor {
            match advisor
                .propose_order(&g, &group)
                .and_then(|edges| check_proposal(&g, &group, &edges))
            {
                Ok((next, new)) => {
                    g = next;
                    groups.push(GroupOrdering {
                        group,
                        source: CorrectionSource::Advisor,
                        edges: new.iter().map(Edge::to_string).collect(),
                        advisor_note: None,
                    });
                    added.extend(new);
                    continue;
                }
                Err(why) => note = Some(why),
            }
        }
        let chain = fallback_chain(&g, &group);
        let (next, new) = with_edges(&g, &chain);
        // A chain edge can close a cycle when siblings already point the
        // other way; such groups are left as they are.
        if !validate_graph(&next).is_empty() {
            continue;
        }
        g = next;
        groups.push(GroupOrdering {
            group,
            source: CorrectionSource::Fallback,
            edges: new.iter().map(Edge::to_string).collect(),
            advisor_note: note,
        });
        added.extend(new);
    }
    Refinement {
        graph: g,
        added: added.iter().map(Edge::to_string).collect(),
        groups,
    }
}
