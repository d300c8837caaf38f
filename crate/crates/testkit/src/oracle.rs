//! Exhaustive grid search over object centers.
//!
//! The layout problem as checked here: every object's box stays in the room,
//! its cluster box (own box grown by its descendants' reach) stays in the room and inside the cluster box of each object
//! parent, every edge predicate holds, and no two objects without an edge
//! between them overlap. Centers are restricted to multiples of `step`.

use std::collections::{BTreeMap, BTreeSet};

use roomsmith::scene::{Adjacency, Edge, Preposition, SceneGraph};

const TOL: f64 = 1e-6;

/// Center per object id.
pub type Centers = BTreeMap<String, [f64; 3]>;

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Sat(Centers),
    Unsat,
    /// The node budget ran out first.
    Unknown,
}

#[derive(Clone, Debug)]
pub struct Oracle {
    pub step: f64,
    pub nonadjacent: (f64, f64),
    pub contact_tolerance: f64,
    pub node_budget: u64,
}

impl Default for Oracle {
    fn default() -> Self {
        Self {
            step: 0.05,
            nonadjacent: (0.3, 1.5),
            contact_tolerance: 1e-6,
            node_budget: 2_000_000,
        }
    }
}

/// World half extents of a node (x and y swap at 90 and 270 degrees).
pub fn half(graph: &SceneGraph, id: &str) -> [f64; 3] {
    let n = graph.node(id).expect("known node");
    let s = [n.size.x / 2.0, n.size.y / 2.0, n.size.z / 2.0];
    if n.rotation.degrees() % 180 == 90 {
        [s[1], s[0], s[2]]
    } else {
        s
    }
}

/// World axis (0 = x, 1 = y) and sign of a lateral preposition for a parent
/// rotated clockwise by `degrees`.
pub fn lateral_side(p: Preposition, degrees: u16) -> (usize, f64) {
    let (mut x, mut y): (i32, i32) = match p {
        Preposition::LeftOf => (-1, 0),
        Preposition::RightOf => (1, 0),
        Preposition::InFront => (0, 1),
        Preposition::Behind => (0, -1),
        _ => panic!("not lateral"),
    };
    for _ in 0..(degrees / 90) {
        (x, y) = (y, -x);
    }
    if x != 0 {
        (0, x as f64)
    } else {
        (1, y as f64)
    }
}

#[derive(Clone, Copy, Debug)]
struct Bx {
    lo: [f64; 3],
    hi: [f64; 3],
}

fn bx(c: [f64; 3], h: [f64; 3]) -> Bx {
    Bx {
        lo: [c[0] - h[0], c[1] - h[1], c[2] - h[2]],
        hi: [c[0] + h[0], c[1] + h[1], c[2] + h[2]],
    }
}

fn eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

fn nested(a: &Bx, b: &Bx, k: usize) -> bool {
    let a_in_b = a.lo[k] >= b.lo[k] - TOL && a.hi[k] <= b.hi[k] + TOL;
    let b_in_a = b.lo[k] >= a.lo[k] - TOL && b.hi[k] <= a.hi[k] + TOL;
    a_in_b || b_in_a
}

fn inside(a: &Bx, b: &Bx, k: usize) -> bool {
    a.lo[k] >= b.lo[k] - TOL && a.hi[k] <= b.hi[k] + TOL
}

fn volume(a: &Bx, b: &Bx) -> f64 {
    (0..3)
        .map(|k| (a.hi[k].min(b.hi[k]) - a.lo[k].max(b.lo[k])).max(0.0))
        .product()
}

impl Oracle {
    fn wall_of(id: &str) -> Option<(usize, f64)> {
        match id {
            "wall_east" => Some((0, 1.0)),
            "wall_west" => Some((0, -1.0)),
            "wall_north" => Some((1, 1.0)),
            "wall_south" => Some((1, -1.0)),
            _ => None,
        }
    }

    /// Does `edge` hold along axis `k` for child box `c`? `parent` is the
    /// placed parent box (object parents only).
    fn edge_axis(&self, graph: &SceneGraph, edge: &Edge, k: usize, c: &Bx, parent: Option<&Bx>) -> bool {
        let room = [graph.room.width_x, graph.room.depth_y, graph.room.height_z];
        let flush = |k: usize, sign: f64| {
            if sign > 0.0 {
                eq(c.hi[k], room[k])
            } else {
                eq(c.lo[k], 0.0)
            }
        };
        if edge.preposition == Preposition::InTheCorner {
            if k == 2 {
                return match edge.parent.as_str() {
                    "ceiling" => eq(c.hi[2], room[2]),
                    p if Self::wall_of(p).is_some() => true,
                    _ => eq(c.lo[2], 0.0),
                };
            }
            let sign = graph
                .inbound(&edge.child)
                .filter(|e| e.preposition == Preposition::InTheCorner)
                .filter_map(|e| Self::wall_of(&e.parent))
                .find(|(axis, _)| *axis == k)
                .map(|(_, s)| s)
                .unwrap_or(-1.0);
            return flush(k, sign);
        }
        match edge.parent.as_str() {
            "floor" => return k != 2 || eq(c.lo[2], 0.0),
            "ceiling" => return k != 2 || eq(c.hi[2], room[2]),
            "middle_of_room" => {
                if k == 2 {
                    return eq(c.lo[2], 0.0);
                }
                let mid = (c.lo[k] + c.hi[k]) / 2.0;
                return mid >= 0.25 * room[k] - TOL && mid <= 0.75 * room[k] + TOL;
            }
            p => {
                if let Some((axis, sign)) = Self::wall_of(p) {
                    return k != axis || flush(axis, sign);
                }
            }
        }
        let p = parent.expect("object parent placed");
        match edge.preposition {
            Preposition::On => {
                if k == 2 {
                    eq(c.lo[2], p.hi[2])
                } else {
                    inside(c, p, k)
                }
            }
            Preposition::Under => {
                if k == 2 {
                    eq(c.lo[2], 0.0) && c.hi[2] <= p.lo[2] + TOL
                } else {
                    inside(c, p, k)
                }
            }
            Preposition::Above => {
                if k == 2 {
                    c.lo[2] >= p.hi[2] - TOL
                } else {
                    let mid = (c.lo[k] + c.hi[k]) / 2.0;
                    mid >= p.lo[k] - TOL && mid <= p.hi[k] + TOL
                }
            }
            lateral => {
                if k == 2 {
                    return true;
                }
                let deg = graph.node(&edge.parent).expect("known parent").rotation.degrees();
                let (axis, sign) = lateral_side(lateral, deg);
                if k != axis {
                    return nested(c, p, k);
                }
                let gap = if sign > 0.0 { c.lo[k] - p.hi[k] } else { p.lo[k] - c.hi[k] };
                match edge.adjacency {
                    Adjacency::Adjacent => eq(gap, 0.0),
                    Adjacency::NotAdjacent => {
                        gap >= self.nonadjacent.0 - TOL && gap <= self.nonadjacent.1 + TOL
                    }
                }
            }
        }
    }

    /// Height rule for objects whose edges are all lateral: the object rests
    /// at the level of the first lateral parent's bottom.
    fn z_anchor(graph: &SceneGraph, id: &str) -> Option<String> {
        let mut inbound = graph.inbound(id).peekable();
        let all_lateral = inbound.peek().is_some()
            && graph.inbound(id).all(|e| {
                graph.node(&e.parent).is_some()
                    && matches!(
                        e.preposition,
                        Preposition::LeftOf | Preposition::RightOf | Preposition::InFront | Preposition::Behind
                    )
            });
        if all_lateral {
            graph.inbound(id).next().map(|e| e.parent.clone())
        } else {
            None
        }
    }

    /// Walls an object stands against, as (axis, sign).
    fn flush(graph: &SceneGraph, id: &str) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut corner = [None, None];
        for e in graph.inbound(id) {
            let Some((axis, sign)) = Self::wall_of(&e.parent) else { continue };
            match e.preposition {
                Preposition::On => out.push((axis, sign)),
                Preposition::InTheCorner => {
                    corner[axis] = corner[axis].or(Some(sign));
                }
                _ => {}
            }
        }
        if corner.iter().any(Option::is_some) {
            for (axis, sign) in corner.iter().enumerate() {
                out.push((axis, sign.unwrap_or(-1.0)));
            }
        }
        out
    }

    /// Range of child center offsets from the parent center counted in the
    /// parent's cluster extents, per horizontal axis: the smallest gap along
    /// a lateral edge, and on the free axes every offset the edge allows
    /// that keeps the child's cluster off the walls the parent stands
    /// against.
    fn offsets(&self, graph: &SceneGraph, e: &Edge, child_cs: [f64; 4]) -> [(f64, f64); 2] {
        let ph = half(graph, &e.parent);
        let ch = half(graph, &e.child);
        let mut out = [(0.0, 0.0); 2];
        let mut free: Vec<(usize, f64)> = Vec::new();
        match e.preposition {
            Preposition::LeftOf | Preposition::RightOf | Preposition::InFront | Preposition::Behind => {
                let deg = graph.node(&e.parent).expect("known parent").rotation.degrees();
                let (axis, sign) = lateral_side(e.preposition, deg);
                let gap = match e.adjacency {
                    Adjacency::Adjacent => 0.0,
                    Adjacency::NotAdjacent => self.nonadjacent.0,
                };
                let d = sign * (ph[axis] + ch[axis] + gap);
                out[axis] = (d, d);
                let other = 1 - axis;
                free.push((other, (ph[other] - ch[other]).abs()));
            }
            Preposition::Above => free.extend([(0, ph[0]), (1, ph[1])]),
            _ => free.extend([(0, (ph[0] - ch[0]).max(0.0)), (1, (ph[1] - ch[1]).max(0.0))]),
        }
        let walls = Self::flush(graph, &e.parent);
        for (k, range) in free {
            let (mut lo, mut hi) = (-range, range);
            for &(axis, sign) in &walls {
                if axis != k {
                    continue;
                }
                if sign > 0.0 {
                    hi = hi.min(ph[k] - child_cs[2 * k + 1]).max(lo);
                } else {
                    lo = lo.max(child_cs[2 * k] - ph[k]).min(hi);
                }
            }
            out[k] = (lo, hi);
        }
        out
    }

    /// World cluster extents `[x_neg, x_pos, y_neg, y_pos]` of every object:
    /// the union of its own box and each child's cluster box over the child's
    /// counted offsets.
    pub fn cluster_extents(&self, graph: &SceneGraph) -> BTreeMap<String, [f64; 4]> {
        let mut out: BTreeMap<String, [f64; 4]> = BTreeMap::new();
        let ids: Vec<String> = graph.nodes.iter().map(|n| n.id.clone()).collect();
        // Children before parents: repeat until every node is resolved.
        while out.len() < ids.len() {
            for id in &ids {
                if out.contains_key(id) {
                    continue;
                }
                let children: Vec<&Edge> = graph
                    .outbound(id)
                    .filter(|e| graph.node(&e.child).is_some())
                    .collect();
                if children.iter().any(|e| !out.contains_key(&e.child)) {
                    continue;
                }
                let h = half(graph, id);
                let mut cs = [h[0], h[0], h[1], h[1]];
                for e in children {
                    let ccs = out[&e.child];
                    let [dx, dy] = self.offsets(graph, e, ccs);
                    cs[0] = cs[0].max(ccs[0] - dx.0);
                    cs[1] = cs[1].max(dx.1 + ccs[1]);
                    cs[2] = cs[2].max(ccs[2] - dy.0);
                    cs[3] = cs[3].max(dy.1 + ccs[3]);
                }
                out.insert(id.clone(), cs);
            }
        }
        out
    }

    fn grid(&self, lo: f64, hi: f64) -> Vec<f64> {
        let a = ((lo - TOL) / self.step).ceil() as i64;
        let b = ((hi + TOL) / self.step).floor() as i64;
        (a..=b).map(|k| k as f64 * self.step).collect()
    }

    /// Grid centers for `id` satisfying every edge, the room and the
    /// cluster-box constraint, ignoring collisions. All object parents must be
    /// in `placed`.
    pub fn candidates(
        &self,
        graph: &SceneGraph,
        cs: &BTreeMap<String, [f64; 4]>,
        id: &str,
        placed: &Centers,
    ) -> Vec<[f64; 3]> {
        let room = [graph.room.width_x, graph.room.depth_y, graph.room.height_z];
        let h = half(graph, id);
        let c = cs[id];
        let edges: Vec<&Edge> = graph.inbound(id).collect();
        let parents: Vec<Option<Bx>> = edges
            .iter()
            .map(|e| placed.get(&e.parent).map(|pc| bx(*pc, half(graph, &e.parent))))
            .collect();
        let anchor = Self::z_anchor(graph, id);
        // The cluster box must sit inside each object parent's cluster box.
        let enclosing: Vec<([f64; 3], [f64; 4])> = edges
            .iter()
            .filter_map(|e| placed.get(&e.parent).map(|pc| (*pc, cs[&e.parent])))
            .collect();
        let ranges = [
            (c[0].max(h[0]), room[0] - c[1].max(h[0])),
            (c[2].max(h[1]), room[1] - c[3].max(h[1])),
            (h[2], room[2] - h[2]),
        ];
        let mut axes: [Vec<f64>; 3] = Default::default();
        for k in 0..3 {
            axes[k] = self
                .grid(ranges[k].0, ranges[k].1)
                .into_iter()
                .filter(|&v| {
                    let mut center = [0.0; 3];
                    center[k] = v;
                    let b = bx(center, h);
                    let edges_ok = edges
                        .iter()
                        .zip(&parents)
                        .all(|(e, p)| self.edge_axis(graph, e, k, &b, p.as_ref()));
                    let anchored = match (&anchor, k) {
                        (Some(a), 2) => {
                            let pb = bx(placed[a], half(graph, a));
                            eq(b.lo[2], pb.lo[2])
                        }
                        (None, 2) if edges.is_empty() => eq(b.lo[2], 0.0),
                        _ => true,
                    };
                    let enclosed = k == 2
                        || enclosing.iter().all(|(pc, pcs)| {
                            let (neg, pos) = (2 * k, 2 * k + 1);
                            v - c[neg] >= pc[k] - pcs[neg] - TOL && v + c[pos] <= pc[k] + pcs[pos] + TOL
                        });
                    edges_ok && anchored && enclosed
                })
                .collect();
        }
        let mut out = Vec::with_capacity(axes[0].len() * axes[1].len() * axes[2].len());
        for &x in &axes[0] {
            for &y in &axes[1] {
                for &z in &axes[2] {
                    out.push([x, y, z]);
                }
            }
        }
        out
    }

    /// Decides whether any grid assignment satisfies the whole problem.
    pub fn solve(&self, graph: &SceneGraph) -> Verdict {
        let cs = self.cluster_extents(graph);
        let order = placement_order(graph);
        let sanctioned: BTreeSet<(String, String)> = graph
            .edges
            .iter()
            .flat_map(|e| [(e.parent.clone(), e.child.clone()), (e.child.clone(), e.parent.clone())])
            .collect();
        let mut placed = Centers::new();
        let mut budget = self.node_budget;
        match self.dfs(graph, &cs, &order, 0, &mut placed, &sanctioned, &mut budget) {
            Some(true) => Verdict::Sat(placed),
            Some(false) => Verdict::Unsat,
            None => Verdict::Unknown,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        graph: &SceneGraph,
        cs: &BTreeMap<String, [f64; 4]>,
        order: &[String],
        i: usize,
        placed: &mut Centers,
        sanctioned: &BTreeSet<(String, String)>,
        budget: &mut u64,
    ) -> Option<bool> {
        if i == order.len() {
            return Some(true);
        }
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        let id = &order[i];
        let h = half(graph, id);
        let others: Vec<Bx> = placed
            .iter()
            .filter(|(o, _)| !sanctioned.contains(&(id.clone(), (*o).clone())))
            .map(|(o, c)| bx(*c, half(graph, o)))
            .collect();
        for cand in self.candidates(graph, cs, id, placed) {
            let b = bx(cand, h);
            if others.iter().any(|o| volume(&b, o) > self.contact_tolerance) {
                continue;
            }
            placed.insert(id.clone(), cand);
            match self.dfs(graph, cs, order, i + 1, placed, sanctioned, budget) {
                Some(true) => return Some(true),
                None => {
                    placed.remove(id);
                    return None;
                }
                Some(false) => {
                    placed.remove(id);
                }
            }
        }
        Some(false)
    }
}

/// Objects ordered so that every object parent comes before its children
/// (repeated sweeps in id order).
pub fn placement_order(graph: &SceneGraph) -> Vec<String> {
    let mut ids: Vec<String> = graph.nodes.iter().map(|n| n.id.clone()).collect();
    ids.sort();
    let mut done: BTreeSet<String> = BTreeSet::new();
    let mut order = Vec::new();
    while order.len() < ids.len() {
        let before = order.len();
        for id in &ids {
            if done.contains(id) {
                continue;
            }
            if graph
                .inbound(id)
                .all(|e| graph.node(&e.parent).is_none() || done.contains(&e.parent))
            {
                done.insert(id.clone());
                order.push(id.clone());
            }
        }
        assert!(order.len() > before, "graph has a cycle");
    }
    order
}

/// Per-axis `(min, max)` over a set of centers.
pub fn bounds(points: &[[f64; 3]]) -> Option<[(f64, f64); 3]> {
    let first = points.first()?;
    let mut b = [(first[0], first[0]), (first[1], first[1]), (first[2], first[2])];
    for p in points {
        for k in 0..3 {
            b[k].0 = b[k].0.min(p[k]);
            b[k].1 = b[k].1.max(p[k]);
        }
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lateral_sides_follow_compass_rotation() {
        assert_eq!(lateral_side(Preposition::InFront, 0), (1, 1.0));
        assert_eq!(lateral_side(Preposition::InFront, 90), (0, 1.0));
        assert_eq!(lateral_side(Preposition::LeftOf, 90), (1, 1.0));
        assert_eq!(lateral_side(Preposition::Behind, 180), (1, 1.0));
        assert_eq!(lateral_side(Preposition::RightOf, 270), (1, 1.0));
    }
}
