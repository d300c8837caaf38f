//! Rule-based repair of scene graphs before layout.
//!
//! [`detect_violations`] finds structural implausibilities, [`resolve_violations`]
//! rewrites the offending edges (asking an optional [`CorrectionAdvisor`]
//! first), [`refine_siblings`] orders children that share a parent and
//! relation, and [`break_cycles`] restores a hierarchy.

mod cycles;
mod detect;
mod refine;
mod resolve;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scene::{Dir2, Edge, SceneGraph};

pub use cycles::break_cycles;
pub use detect::{detect_violations, flush_walls};
pub use refine::{refine_siblings, sibling_groups, GroupOrdering, Refinement, SiblingGroup};
pub use resolve::{resolve_violations, Resolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    OutOfBounds,
    AdjacencyConflict,
    SizeIncompatibility,
    Orphan,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::OutOfBounds => "OutOfBounds",
            ViolationKind::AdjacencyConflict => "AdjacencyConflict",
            ViolationKind::SizeIncompatibility => "SizeIncompatibility",
            ViolationKind::Orphan => "Orphan",
        })
    }
}

/// A detected implausibility.
///
/// `subject` is the node to move: the pushed-out child, the interposed
/// object, the overloaded parent or the orphan. `context` lists the other
/// nodes involved.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: String,
    pub context: Vec<String>,
    pub message: String,
}

impl Violation {
    /// The object a fix re-places: the highest-id child of an overloaded
    /// parent, otherwise the subject.
    pub fn mover(&self) -> &str {
        match self.kind {
            ViolationKind::SizeIncompatibility => self
                .context
                .iter()
                .max()
                .map(String::as_str)
                .unwrap_or(&self.subject),
            _ => &self.subject,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}): {}", self.kind, self.subject, self.message)
    }
}

/// Where a correction came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionSource {
    Advisor,
    Fallback,
    LastResort,
}

/// A single rewrite applied to the graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum GraphChange {
    EdgeReplaced { old: String, new: String },
    EdgeRemoved { edge: String },
    EdgeAdded { edge: String },
    NodeRemoved { node: String },
    NodeRotated { node: String, degrees: u16 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRecord {
    pub violation: Violation,
    pub source: CorrectionSource,
    pub changes: Vec<GraphChange>,
    /// Why an advisor proposal was not used, if one was asked for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisor_note: Option<String>,
}

/// Replacement placement for one object.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProposal {
    /// New inbound edges of the subject; they replace all existing ones.
    pub inbound: Vec<Edge>,
    pub rotation: Option<crate::scene::Rotation>,
}

/// Source of suggested fixes, usually a language model.
///
/// Proposals are checked before use; anything that fails the check falls
/// back to the deterministic rules.
pub trait CorrectionAdvisor {
    fn propose_fix(&self, graph: &SceneGraph, violation: &Violation) -> Result<EdgeProposal, String>;
}

/// Source of sibling orderings.
pub trait OrderingAdvisor {
    /// Edges among `group.children` (and optionally to the parent) that order them.
    fn propose_order(&self, graph: &SceneGraph, group: &SiblingGroup) -> Result<Vec<Edge>, String>;
}

/// Horizontal world side or vertical direction of one node relative to another.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Side {
    Flat(Dir2),
    Up,
    Down,
}

impl Side {
    pub(crate) fn opposite(self) -> Side {
        match self {
            Side::Up => Side::Down,
            Side::Down => Side::Up,
            Side::Flat(d) => Side::Flat(d.opposite()),
        }
    }
}

/// Outcome of [`correct_graph`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectionReport {
    #[serde(skip)]
    pub graph: SceneGraph,
    /// Edges dropped to break cycles, before and after refinement.
    pub cycle_edges_removed: Vec<String>,
    /// Violations found on the incoming graph.
    pub detected: Vec<Violation>,
    pub corrections: Vec<CorrectionRecord>,
    pub refinement: Refinement,
    /// Violations left after the final pass; empty unless a fix was impossible.
    pub remaining: Vec<Violation>,
}

/// Full repair pass: break cycles, resolve violations, order siblings,
/// then break cycles and resolve once more.
pub fn correct_graph(
    graph: &SceneGraph,
    advisor: Option<&dyn CorrectionAdvisor>,
    ordering: Option<&dyn OrderingAdvisor>,
) -> CorrectionReport {
    let (g, mut cut) = break_cycles(graph);
    let detected = detect_violations(&g);
    let first = resolve_violations(&g, &detected, advisor);
    let mut corrections = first.log;
    let refinement = refine_siblings(&first.graph, ordering);
    let (g, more) = break_cycles(&refinement.graph);
    cut.extend(more);
    let late = detect_violations(&g);
    let second = resolve_violations(&g, &late, advisor);
    corrections.extend(second.log);
    let remaining = detect_violations(&second.graph);
    CorrectionReport {
        graph: second.graph,
        cycle_edges_removed: cut.iter().map(Edge::to_string).collect(),
        detected,
        corrections,
        refinement,
        remaining,
    }
}
