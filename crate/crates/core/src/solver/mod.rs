//! Absolute placement of a refined scene graph.
//!
//! Cluster extents are computed first so each object reserves room for its
//! descendants. Objects are then placed level by level (a node's level is the
//! longest edge path from a layout element, so every object parent sits on an
//! earlier level) by sampling from the node's feasible region and rejecting
//! collisions. A level that cannot be completed clears itself and everything
//! after it and re-samples the previous level.

mod backtrack;
mod cluster;
mod collision;
pub mod placement;
mod region;
mod verify;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::scene::{Room, Rotation, SceneError, Vec3};

pub use backtrack::solve_layout;
pub use cluster::compute_cluster_extents;
pub use collision::{check_collision, sanctioned_pairs};
pub use region::{feasible_region, FeasibleRegion};
pub use verify::{cluster_containment_violations, verify_layout, LayoutDefect};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub samples_per_object: usize,
    pub max_backtracks: usize,
    /// Resamples of a level before its failures are passed up one more level.
    pub level_retries: usize,
    /// Intersection volume (m³) tolerated between two boxes.
    pub contact_tolerance: f64,
    /// Largest face gap the verifier still accepts as "adjacent".
    pub adjacency_gap: f64,
    /// Face gap range for "not adjacent" lateral relations.
    pub nonadjacent_range: (f64, f64),
    /// Sampled coordinates are snapped to multiples of this step from the
    /// low end of each feasible interval.
    pub position_quantum: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            samples_per_object: 30,
            max_backtracks: 200,
            level_retries: 8,
            contact_tolerance: 1e-6,
            adjacency_gap: 0.05,
            nonadjacent_range: (0.3, 1.5),
            position_quantum: 0.01,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.samples_per_object == 0 {
            return Err("samples_per_object must be positive".into());
        }
        if self.max_backtracks == 0 {
            return Err("max_backtracks must be positive".into());
        }
        if self.level_retries == 0 {
            return Err("level_retries must be positive".into());
        }
        if !(self.contact_tolerance > 0.0) {
            return Err("contact_tolerance must be positive".into());
        }
        if !(self.adjacency_gap > 0.0) {
            return Err("adjacency_gap must be positive".into());
        }
        let (lo, hi) = self.nonadjacent_range;
        if !(lo > 0.0 && lo < hi) {
            return Err("nonadjacent_range must satisfy 0 < min < max".into());
        }
        if !(self.position_quantum > 0.0) {
            return Err("position_quantum must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub position: Vec3,
    pub rotation: Rotation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    Unsat,
}

/// One backtrack: `failing_level` could not be completed, every level from
/// `cleared_from_level` on was cleared, and `resampled_level` is placed again.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BacktrackEvent {
    pub failing_level: usize,
    pub cleared_from_level: usize,
    pub resampled_level: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LayoutStats {
    pub samples_drawn: u64,
    pub backtracks: usize,
    pub events: Vec<BacktrackEvent>,
    /// Not serialized so that layout files are reproducible.
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl PartialEq for LayoutStats {
    fn eq(&self, other: &Self) -> bool {
        self.samples_drawn == other.samples_drawn
            && self.backtracks == other.backtracks
            && self.events == other.events
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub room: Room,
    pub status: SolveStatus,
    pub seed: u64,
    pub placements: BTreeMap<String, Placement>,
    pub stats: LayoutStats,
}

impl Layout {
    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Solved
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("layouts always serialize");
        s.push('\n');
        s
    }
}

/// Why a solve gave up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnsatReport {
    /// Deepest level that was ever completely placed (0 if none).
    pub deepest_level: usize,
    /// Level whose failure ended the search.
    pub failing_level: usize,
    /// Failed placement attempts per node.
    pub failures: BTreeMap<String, usize>,
    /// Placements at the time the search stopped.
    pub partial: Layout,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("no layout found: level {} failed, deepest completed level {}", .0.failing_level, .0.deepest_level)]
    Unsat(Box<UnsatReport>),
    #[error("{node} cannot be placed before its parent {parent}")]
    ParentUnplaced { node: String, parent: String },
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("graph is not solvable as given: {}", .0.join("; "))]
    InvalidGraph(Vec<String>),
    #[error("invalid solver config: {0}")]
    Config(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}
