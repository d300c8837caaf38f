use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scene::{
    is_layout_id, placement_levels, topological_order, validate_refined_graph, Aabb, SceneGraph,
};

use super::collision::{check_collision, sanctioned_pairs};
use super::placement::Interval;
use super::region::{feasible_region, FeasibleRegion};
use super::{
    compute_cluster_extents, BacktrackEvent, Layout, LayoutStats, Placement, SolveError,
    SolveStatus, SolverConfig, UnsatReport,
};

/// Grid of candidate coordinates: `lo + k*q` up to `hi`, plus `hi` itself.
fn candidates(iv: Interval, q: f64) -> Vec<f64> {
    if iv.width() <= 1e-12 {
        return vec![iv.lo];
    }
    let n = ((iv.hi - iv.lo) / q + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|k| iv.lo + k as f64 * q).collect();
    if iv.hi - out[n] > 1e-9 {
        out.push(iv.hi);
    }
    out
}

enum GroupFailure {
    EmptyRegion,
    Collisions,
}

struct Search<'a> {
    graph: &'a SceneGraph,
    config: &'a SolverConfig,
    sanctioned: BTreeSet<(String, String)>,
    placed: BTreeMap<String, Placement>,
    rng: ChaCha8Rng,
    stats: LayoutStats,
    failures: BTreeMap<String, usize>,
}

impl Search<'_> {
    fn sample_node(&mut self, id: &str, region: &FeasibleRegion) -> Option<Placement> {
        let node = self.graph.node(id).expect("grouped ids come from the graph");
        let rotation = node.rotation;
        let half = rotation.world_half_extents(node.size);
        let axes = [
            candidates(region.x, self.config.position_quantum),
            candidates(region.y, self.config.position_quantum),
            candidates(region.z, self.config.position_quantum),
        ];
        let total = axes
            .iter()
            .fold(1usize, |acc, a| acc.saturating_mul(a.len()));
        let budget = self.config.samples_per_object;
        let picks: Vec<[usize; 3]> = if total <= budget {
            let mut all = Vec::with_capacity(total);
            for i in 0..axes[0].len() {
                for j in 0..axes[1].len() {
                    for k in 0..axes[2].len() {
                        all.push([i, j, k]);
                    }
                }
            }
            all.shuffle(&mut self.rng);
            all
        } else {
            (0..budget)
                .map(|_| {
                    [
                        self.rng.random_range(0..axes[0].len()),
                        self.rng.random_range(0..axes[1].len()),
                        self.rng.random_range(0..axes[2].len()),
                    ]
                })
                .collect()
        };

        let placed_boxes: Vec<(&str, Aabb)> = self
            .placed
            .iter()
            .map(|(pid, p)| {
                let n = self.graph.node(pid).expect("placed ids come from the graph");
                (pid.as_str(), Aabb::of_object(p.position, n.size, p.rotation))
            })
            .collect();
        let mut drawn = 0u64;
        let mut found = None;
        for [i, j, k] in picks {
            drawn += 1;
            let center = crate::scene::Vec3::new(axes[0][i], axes[1][j], axes[2][k]);
            let candidate = Aabb::from_center(center, half);
            if !check_collision(
                id,
                &candidate,
                &placed_boxes,
                &self.sanctioned,
                self.config.contact_tolerance,
            ) {
                found = Some(Placement {
                    position: center,
                    rotation,
                });
                break;
            }
        }
        self.stats.samples_drawn += drawn;
        found
    }

    fn place_group(&mut self, group: &[String]) -> Result<(), GroupFailure> {
        for id in group {
            let region = feasible_region(id, self.graph, &self.placed, self.config)
                .expect("parents of a level are placed before it");
            if region.is_empty() {
                *self.failures.entry(id.clone()).or_default() += 1;
                return Err(GroupFailure::EmptyRegion);
            }
            match self.sample_node(id, &region) {
                Some(p) => {
                    self.placed.insert(id.clone(), p);
                }
                None => {
                    *self.failures.entry(id.clone()).or_default() += 1;
                    return Err(GroupFailure::Collisions);
                }
            }
        }
        Ok(())
    }

    fn clear(&mut self, groups: &[Vec<String>]) {
        for g in groups {
            for id in g {
                self.placed.remove(id);
            }
        }
    }
}

/// Places every object of `graph`.
///
/// Missing cluster extents are computed on the fly. Levels are numbered from
/// 1; `groups[d - 1]` holds level `d` in topological order.
pub fn solve_layout(graph: &SceneGraph, config: &SolverConfig) -> Result<Layout, SolveError> {
    let started = Instant::now();
    config.validate().map_err(SolveError::Config)?;
    let report = validate_refined_graph(graph);
    if !report.is_empty() {
        return Err(SolveError::InvalidGraph(
            report.errors.iter().map(|e| e.to_string()).collect(),
        ));
    }
    let annotated;
    let graph = if graph.nodes.iter().all(|n| n.cluster_extents.is_some()) {
        graph
    } else {
        annotated = compute_cluster_extents(graph, config)?;
        &annotated
    };

    let levels = placement_levels(graph)?;
    let max_level = levels.values().copied().max().unwrap_or(0);
    let mut groups: Vec<Vec<String>> = vec![Vec::new(); max_level];
    for id in topological_order(graph)? {
        if !is_layout_id(&id) {
            groups[levels[&id] - 1].push(id);
        }
    }

    let mut search = Search {
        graph,
        config,
        sanctioned: sanctioned_pairs(graph),
        placed: BTreeMap::new(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        stats: LayoutStats::default(),
        failures: BTreeMap::new(),
    };
    let mut deepest = 0usize;
    // retries[d]: resamples of level d since level d - 1 was last placed.
    let mut retries = vec![0usize; max_level + 2];
    let mut d = 1usize;
    while d <= max_level {
        match search.place_group(&groups[d - 1]) {
            Ok(()) => {
                deepest = deepest.max(d);
                d += 1;
                retries[d] = 0;
            }
            Err(failure) => {
                let permanent = matches!(failure, GroupFailure::EmptyRegion) && d == 1;
                if permanent || search.stats.backtracks >= config.max_backtracks {
                    let unsat = finish(search, graph, config, started, SolveStatus::Unsat);
                    return Err(SolveError::Unsat(Box::new(UnsatReport {
                        deepest_level: deepest,
                        failing_level: d,
                        failures: unsat.1,
                        partial: unsat.0,
                    })));
                }
                search.stats.backtracks += 1;
                // A level that keeps failing after its parent level was
                // resampled level_retries times counts as a failure of the
                // parent level.
                let mut failing = d;
                while failing > 2 && retries[failing - 1] >= config.level_retries {
                    failing -= 1;
                }
                let resampled = if failing > 1 { failing - 1 } else { failing };
                search.clear(&groups[resampled - 1..]);
                retries[resampled] += 1;
                for r in &mut retries[resampled + 1..] {
                    *r = 0;
                }
                search.stats.events.push(BacktrackEvent {
                    failing_level: failing,
                    cleared_from_level: failing,
                    resampled_level: resampled,
                });
                d = resampled;
            }
        }
    }
    let (layout, _) = finish(search, graph, config, started, SolveStatus::Solved);
    Ok(layout)
}

fn finish(
    search: Search<'_>,
    graph: &SceneGraph,
    config: &SolverConfig,
    started: Instant,
    status: SolveStatus,
) -> (Layout, BTreeMap<String, usize>) {
    let mut stats = search.stats;
    stats.wall_clock = started.elapsed();
    tracing::info!(
        target: "roomsmith::solver",
        status = ?status,
        seed = config.seed,
        objects = graph.nodes.len(),
        samples_drawn = stats.samples_drawn,
        backtracks = stats.backtracks,
        wall_clock_ms = stats.wall_clock.as_secs_f64() * 1e3,
        "solve finished"
    );
    (
        Layout {
            room: graph.room,
            status,
            seed: config.seed,
            placements: search.placed,
            stats,
        },
        search.failures,
    )
}
