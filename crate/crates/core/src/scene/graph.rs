//! Structural checks and ordering utilities over scene graphs.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use super::types::{is_layout_id, LayoutElement, SceneGraph};
use super::SceneError;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationError {
    InvalidRoom { width_x: f64, depth_y: f64, height_z: f64 },
    NonPositiveSize { node: String },
    EmptyId { index: usize },
    DuplicateId { node: String },
    ReservedId { node: String },
    SelfLoop { edge: usize, node: String },
    UnknownEndpoint { edge: usize, id: String },
    LayoutNodeAsChild { edge: usize, node: String },
    InvalidLayoutPreposition { edge: usize, parent: String, child: String, preposition: String },
    InvalidObjectPreposition { edge: usize, parent: String, child: String, preposition: String },
    DuplicateEdge { edge: usize, parent: String, child: String },
    ClusterExtentTooSmall { node: String },
    CycleDetected { nodes: Vec<String> },
    Unreachable { node: String },
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ValidationError::*;
        match self {
            InvalidRoom { width_x, depth_y, height_z } => {
                write!(f, "room dimensions must be positive (got {width_x} x {depth_y} x {height_z})")
            }
            NonPositiveSize { node } => write!(f, "{node}: size components must be positive"),
            EmptyId { index } => write!(f, "object #{index} has an empty id"),
            DuplicateId { node } => write!(f, "duplicate object id {node}"),
            ReservedId { node } => write!(f, "{node} is reserved for a room layout element"),
            SelfLoop { edge, node } => write!(f, "edge #{edge} connects {node} to itself"),
            UnknownEndpoint { edge, id } => write!(f, "edge #{edge} references unknown node {id}"),
            LayoutNodeAsChild { edge, node } => {
                write!(f, "edge #{edge} places layout element {node} as a child")
            }
            InvalidLayoutPreposition { edge, parent, child, preposition } => write!(
                f,
                "edge #{edge} ({parent} -> {child}): layout elements only accept \"on\" and \"in the corner\", got \"{preposition}\""
            ),
            InvalidObjectPreposition { edge, parent, child, preposition } => write!(
                f,
                "edge #{edge} ({parent} -> {child}): \"{preposition}\" is not allowed between objects"
            ),
            DuplicateEdge { edge, parent, child } => {
                write!(f, "edge #{edge} duplicates an earlier {parent} -> {child} relation")
            }
            ClusterExtentTooSmall { node } => {
                write!(f, "{node}: cluster extents smaller than the object's own half-extents")
            }
            CycleDetected { nodes } => write!(f, "cycle among {}", nodes.join(", ")),
            Unreachable { node } => write!(f, "{node} is not reachable from any layout element"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationError>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Checks every type invariant of the graph and that it is acyclic.
pub fn validate_graph(graph: &SceneGraph) -> ValidationReport {
    let mut errors = Vec::new();
    let room = graph.room;
    if !room.is_valid() {
        errors.push(ValidationError::InvalidRoom {
            width_x: room.width_x,
            depth_y: room.depth_y,
            height_z: room.height_z,
        });
    }

    let mut seen = BTreeSet::new();
    for (i, node) in graph.nodes.iter().enumerate() {
        if node.id.trim().is_empty() {
            errors.push(ValidationError::EmptyId { index: i });
        } else if is_layout_id(&node.id) {
            errors.push(ValidationError::ReservedId { node: node.id.clone() });
        } else if !seen.insert(node.id.as_str()) {
            errors.push(ValidationError::DuplicateId { node: node.id.clone() });
        }
        if !node.size.is_positive() {
            errors.push(ValidationError::NonPositiveSize { node: node.id.clone() });
        }
        if let Some(cs) = node.cluster_extents {
            let h = node.size;
            let eps = 1e-9;
            if cs.x_neg + eps < h.x / 2.0
                || cs.x_pos + eps < h.x / 2.0
                || cs.y_neg + eps < h.y / 2.0
                || cs.y_pos + eps < h.y / 2.0
            {
                errors.push(ValidationError::ClusterExtentTooSmall { node: node.id.clone() });
            }
        }
    }

    let mut pairs = BTreeSet::new();
    for (i, e) in graph.edges.iter().enumerate() {
        let mut endpoints_ok = true;
        for id in [&e.parent, &e.child] {
            if !graph.contains(id) {
                errors.push(ValidationError::UnknownEndpoint { edge: i, id: id.clone() });
                endpoints_ok = false;
            }
        }
        if e.parent == e.child {
            errors.push(ValidationError::SelfLoop { edge: i, node: e.parent.clone() });
            continue;
        }
        if is_layout_id(&e.child) {
            errors.push(ValidationError::LayoutNodeAsChild { edge: i, node: e.child.clone() });
        }
        if !endpoints_ok {
            continue;
        }
        if is_layout_id(&e.parent) {
            if !e.preposition.allowed_for_layout_parent() {
                errors.push(ValidationError::InvalidLayoutPreposition {
                    edge: i,
                    parent: e.parent.clone(),
                    child: e.child.clone(),
                    preposition: e.preposition.to_string(),
                });
            }
        } else if !e.preposition.allowed_for_object_parent() {
            errors.push(ValidationError::InvalidObjectPreposition {
                edge: i,
                parent: e.parent.clone(),
                child: e.child.clone(),
                preposition: e.preposition.to_string(),
            });
        }
        if !pairs.insert((e.parent.as_str(), e.child.as_str(), e.preposition)) {
            errors.push(ValidationError::DuplicateEdge {
                edge: i,
                parent: e.parent.clone(),
                child: e.child.clone(),
            });
        }
    }

    for component in cyclic_components(graph) {
        errors.push(ValidationError::CycleDetected { nodes: component });
    }

    ValidationReport { errors }
}

/// [`validate_graph`] plus the post-refinement invariant that every object
/// is reachable from a layout element.
pub fn validate_refined_graph(graph: &SceneGraph) -> ValidationReport {
    let mut report = validate_graph(graph);
    let depths = depths(graph);
    for node in &graph.nodes {
        if depths.get(node.id.as_str()).copied().flatten().is_none() {
            report
                .errors
                .push(ValidationError::Unreachable { node: node.id.clone() });
        }
    }
    report
}

/// Strongly connected components with more than one member (or a self loop),
/// each sorted, in ascending order of their first member.
pub fn cyclic_components(graph: &SceneGraph) -> Vec<Vec<String>> {
    let ids = all_ids(graph);
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut adj = vec![Vec::new(); ids.len()];
    let mut self_loop = vec![false; ids.len()];
    for e in &graph.edges {
        if let (Some(&p), Some(&c)) = (index.get(e.parent.as_str()), index.get(e.child.as_str())) {
            adj[p].push(c);
            if p == c {
                self_loop[p] = true;
            }
        }
    }

    // Iterative Tarjan.
    let n = ids.len();
    let mut idx = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut counter = 0usize;
    let mut out = Vec::new();
    for root in 0..n {
        if idx[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        idx[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < adj[v].len() {
                let w = adj[v][*next];
                *next += 1;
                if idx[w] == usize::MAX {
                    idx[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(idx[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == idx[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    if comp.len() > 1 || self_loop[v] {
                        let mut names: Vec<String> = comp.into_iter().map(|i| ids[i].clone()).collect();
                        names.sort();
                        out.push(names);
                    }
                }
            }
        }
    }
    out.sort();
    out
}

fn all_ids(graph: &SceneGraph) -> Vec<String> {
    let mut ids: Vec<String> = LayoutElement::ALL.iter().map(|e| e.id().to_string()).collect();
    ids.extend(graph.nodes.iter().map(|n| n.id.clone()));
    ids
}

/// Layout elements in ascending id order, then objects in a topological
/// order where ties go to the smallest id.
pub fn topological_order(graph: &SceneGraph) -> Result<Vec<String>, SceneError> {
    let mut layout: Vec<&str> = LayoutElement::ALL.iter().map(|e| e.id()).collect();
    layout.sort();
    let mut order: Vec<String> = layout.iter().map(|s| s.to_string()).collect();

    let mut indegree: BTreeMap<&str, usize> =
        graph.nodes.iter().map(|n| (n.id.as_str(), 0)).collect();
    let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
    for e in &graph.edges {
        if is_layout_id(&e.parent) {
            continue;
        }
        if let Some(d) = indegree.get_mut(e.child.as_str()) {
            *d += 1;
        }
        children.entry(e.parent.as_str()).or_default().push(e.child.as_str());
    }
    let mut ready: BTreeSet<&str> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&id, _)| id)
        .collect();
    while let Some(id) = ready.pop_first() {
        order.push(id.to_string());
        if let Some(kids) = children.get(id) {
            for &c in kids {
                if let Some(d) = indegree.get_mut(c) {
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(c);
                    }
                }
            }
        }
    }
    if order.len() != layout.len() + graph.nodes.len() {
        let nodes = cyclic_components(graph).into_iter().flatten().collect();
        return Err(SceneError::CyclicGraph { nodes });
    }
    Ok(order)
}

/// Minimum number of edges from any layout element to each node; `None`
/// for nodes no layout element reaches.
pub fn depths(graph: &SceneGraph) -> BTreeMap<String, Option<usize>> {
    let mut out: BTreeMap<String, Option<usize>> = all_ids(graph).into_iter().map(|id| (id, None)).collect();
    let mut queue = VecDeque::new();
    for e in LayoutElement::ALL {
        out.insert(e.id().to_string(), Some(0));
        queue.push_back((e.id().to_string(), 0usize));
    }
    while let Some((id, d)) = queue.pop_front() {
        for e in graph.outbound(&id) {
            if let Some(slot) = out.get_mut(&e.child) {
                if slot.is_none() {
                    *slot = Some(d + 1);
                    queue.push_back((e.child.clone(), d + 1));
                }
            }
        }
    }
    out
}

pub fn depth_of(graph: &SceneGraph, node: &str) -> Result<usize, SceneError> {
    if is_layout_id(node) {
        return Ok(0);
    }
    if graph.node(node).is_none() {
        return Err(SceneError::UnknownNode { id: node.to_string() });
    }
    depths(graph)
        .get(node)
        .copied()
        .flatten()
        .ok_or_else(|| SceneError::Unreachable { node: node.to_string() })
}

/// Longest edge count from a layout element; every object parent of a node
/// sits at a strictly smaller level. Requires an acyclic graph.
pub fn placement_levels(graph: &SceneGraph) -> Result<BTreeMap<String, usize>, SceneError> {
    let order = topological_order(graph)?;
    let mut level: BTreeMap<String, usize> = BTreeMap::new();
    for id in &order {
        if is_layout_id(id) {
            level.insert(id.clone(), 0);
            continue;
        }
        let l = graph
            .inbound(id)
            .map(|e| level.get(&e.parent).copied().unwrap_or(0) + 1)
            .max()
            .unwrap_or(1);
        level.insert(id.clone(), l);
    }
    Ok(level)
}
