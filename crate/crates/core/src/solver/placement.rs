//! Placement functions: the geometric meaning of each edge.
//!
//! Each edge constrains the child's center to an axis-aligned box. For object
//! parents the horizontal part is expressed relative to the parent's center so
//! the same ranges drive both region computation and cluster extents.

use std::collections::BTreeSet;

use crate::scene::{
    Adjacency, Axis, ClusterExtents, Dir2, Edge, LayoutElement, ObjectNode, Preposition, Room,
    Rotation, SceneGraph, Vec3,
};

use super::SolverConfig;

/// Closed interval; empty when `lo > hi` beyond a small epsilon.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

pub(crate) const EPS: f64 = 1e-9;

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    /// `[-r, r]`.
    pub fn symmetric(r: f64) -> Self {
        Self { lo: -r, hi: r }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi + EPS
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn shift(&self, by: f64) -> Interval {
        Interval::new(self.lo + by, self.hi + by)
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }

    /// Snaps a tiny negative width (floating-point noise) to a point.
    pub(crate) fn normalized(self) -> Interval {
        if self.lo > self.hi && self.lo <= self.hi + EPS {
            Interval::point((self.lo + self.hi) / 2.0)
        } else {
            self
        }
    }
}

/// Face gap range between parent and child for a lateral edge.
pub fn gap_range(adjacency: Adjacency, config: &SolverConfig) -> (f64, f64) {
    match adjacency {
        Adjacency::Adjacent => (0.0, 0.0),
        Adjacency::NotAdjacent => config.nonadjacent_range,
    }
}

/// The world side of `parent` a lateral preposition points to.
pub fn lateral_world_side(preposition: Preposition, parent_rotation: Rotation) -> Option<Dir2> {
    preposition
        .local_side()
        .map(|side| parent_rotation.to_world(side))
}

fn axis_index(axis: Axis) -> usize {
    match axis {
        Axis::X => 0,
        Axis::Y => 1,
        Axis::Z => 2,
    }
}

/// Allowed offsets of the child's center from an object parent's center in
/// the horizontal plane, as `[x, y]`. Both half-extent vectors are world-frame.
pub fn relative_offset(
    edge: &Edge,
    parent_half: Vec3,
    parent_rotation: Rotation,
    child_half: Vec3,
    config: &SolverConfig,
) -> [Interval; 2] {
    match edge.preposition {
        Preposition::On | Preposition::Under => [
            Interval::symmetric(parent_half.x - child_half.x),
            Interval::symmetric(parent_half.y - child_half.y),
        ],
        Preposition::Above => [
            Interval::symmetric(parent_half.x),
            Interval::symmetric(parent_half.y),
        ],
        p if p.is_lateral() => {
            let side = lateral_world_side(p, parent_rotation).expect("lateral preposition");
            let (gmin, gmax) = gap_range(edge.adjacency, config);
            let a = side.axis();
            let b = side.lateral_axis();
            let base = parent_half.get(a) + child_half.get(a);
            let along = if side.sign() > 0.0 {
                Interval::new(base + gmin, base + gmax)
            } else {
                Interval::new(-(base + gmax), -(base + gmin))
            };
            // The narrower of the two facing spans lies within the wider one.
            let across = Interval::symmetric((parent_half.get(b) - child_half.get(b)).abs());
            let mut out = [Interval::point(0.0); 2];
            out[axis_index(a)] = along;
            out[axis_index(b)] = across;
            out
        }
        // Not legal between objects; treated as unconstrained horizontally.
        _ => [Interval::new(f64::NEG_INFINITY, f64::INFINITY); 2],
    }
}

/// World sides on which `id` stands flush against a wall: walls it is "on",
/// and both walls of its corner if it is "in the corner".
pub fn flush_sides(graph: &SceneGraph, id: &str) -> BTreeSet<Dir2> {
    let mut out = BTreeSet::new();
    let mut cornered = false;
    for e in graph.inbound(id) {
        match e.preposition {
            Preposition::On => {
                if let Some(n) = LayoutElement::from_id(&e.parent).and_then(|l| l.wall_normal()) {
                    out.insert(n);
                }
            }
            Preposition::InTheCorner => cornered = true,
            _ => {}
        }
    }
    if cornered {
        let (x, y) = corner_sides(id, &graph.edges);
        out.insert(x);
        out.insert(y);
    }
    out
}

/// Child center offsets from the parent center, `[x, y]`, used to size
/// cluster extents.
///
/// Along a lateral edge the child sits at the smallest allowed gap. On the
/// free axes (across a lateral edge, both axes for vertical relations) the
/// child may take any offset the edge allows, except offsets that would push
/// its cluster past a wall the parent stands against. `child_cs` is
/// world-frame; `None` for prepositions that do not relate two objects.
pub fn cluster_offsets(
    edge: &Edge,
    parent_half: Vec3,
    parent_rotation: Rotation,
    child_half: Vec3,
    child_cs: &ClusterExtents,
    flush: &BTreeSet<Dir2>,
    config: &SolverConfig,
) -> Option<[Interval; 2]> {
    let mut out = [Interval::point(0.0); 2];
    let mut free: Vec<(Axis, f64)> = Vec::new();
    match edge.preposition {
        Preposition::On | Preposition::Under => {
            for axis in [Axis::X, Axis::Y] {
                free.push((axis, (parent_half.get(axis) - child_half.get(axis)).max(0.0)));
            }
        }
        Preposition::Above => {
            for axis in [Axis::X, Axis::Y] {
                free.push((axis, parent_half.get(axis)));
            }
        }
        p if p.is_lateral() => {
            let side = lateral_world_side(p, parent_rotation)?;
            let (gmin, _) = gap_range(edge.adjacency, config);
            let a = side.axis();
            out[axis_index(a)] =
                Interval::point(side.sign() * (parent_half.get(a) + child_half.get(a) + gmin));
            let b = side.lateral_axis();
            free.push((b, (parent_half.get(b) - child_half.get(b)).abs()));
        }
        _ => return None,
    }
    for (axis, range) in free {
        let mut iv = Interval::symmetric(range);
        for wall in flush.iter().filter(|d| d.axis() == axis) {
            // Farthest the child's center may go toward the wall.
            let reach = parent_half.get(axis) - child_cs.get(*wall);
            if wall.sign() > 0.0 {
                iv.hi = iv.hi.min(reach).max(iv.lo);
            } else {
                iv.lo = iv.lo.max(-reach).min(iv.hi);
            }
        }
        out[axis_index(axis)] = iv;
    }
    Some(out)
}

/// Where an already-placed object sits.
#[derive(Clone, Copy, Debug)]
pub struct PlacedParent {
    pub center: Vec3,
    pub half: Vec3,
    pub rotation: Rotation,
}

/// Per-axis constraint box from one edge; `None` leaves the axis free.
#[derive(Clone, Copy, Debug, Default)]
pub struct EdgeBox {
    pub axes: [Option<Interval>; 3],
}

impl EdgeBox {
    fn set(&mut self, axis: Axis, iv: Interval) {
        self.axes[axis_index(axis)] = Some(iv);
    }
}

/// Constraint box for an edge whose parent is an object.
pub fn object_edge_box(
    edge: &Edge,
    parent: &PlacedParent,
    child_half: Vec3,
    room: &Room,
    config: &SolverConfig,
) -> EdgeBox {
    let rel = relative_offset(edge, parent.half, parent.rotation, child_half, config);
    let mut b = EdgeBox::default();
    b.set(Axis::X, rel[0].shift(parent.center.x));
    b.set(Axis::Y, rel[1].shift(parent.center.y));
    let parent_top = parent.center.z + parent.half.z;
    let parent_bottom = parent.center.z - parent.half.z;
    match edge.preposition {
        Preposition::On => b.set(Axis::Z, Interval::point(parent_top + child_half.z)),
        Preposition::Under => {
            if parent_bottom + EPS >= 2.0 * child_half.z {
                b.set(Axis::Z, Interval::point(child_half.z));
            } else {
                b.set(Axis::Z, Interval::new(1.0, 0.0));
            }
        }
        Preposition::Above => b.set(
            Axis::Z,
            Interval::new(parent_top + child_half.z, room.height_z - child_half.z),
        ),
        _ => {}
    }
    b
}

/// Which corner an `in the corner` child occupies, as the world sides on x and y.
/// Wall parents fix their own side; an unspecified side defaults to west/south.
pub fn corner_sides(child: &str, edges: &[Edge]) -> (Dir2, Dir2) {
    let mut x_side = None;
    let mut y_side = None;
    for e in edges
        .iter()
        .filter(|e| e.child == child && e.preposition == Preposition::InTheCorner)
    {
        if let Some(normal) = LayoutElement::from_id(&e.parent).and_then(|l| l.wall_normal()) {
            match normal.axis() {
                Axis::X => x_side = x_side.or(Some(normal)),
                _ => y_side = y_side.or(Some(normal)),
            }
        }
    }
    (x_side.unwrap_or(Dir2::NegX), y_side.unwrap_or(Dir2::NegY))
}

fn flush(side: Dir2, half: f64, room_len: f64) -> Interval {
    if side.sign() > 0.0 {
        Interval::point(room_len - half)
    } else {
        Interval::point(half)
    }
}

/// Constraint box for an edge whose parent is a room layout element.
pub fn layout_edge_box(
    edge: &Edge,
    element: LayoutElement,
    child: &ObjectNode,
    all_edges: &[Edge],
    room: &Room,
) -> EdgeBox {
    let h = child.half_extents();
    let free_z = Interval::new(h.z, room.height_z - h.z);
    let mut b = EdgeBox::default();
    if edge.preposition == Preposition::InTheCorner {
        let (xs, ys) = corner_sides(&child.id, all_edges);
        b.set(Axis::X, flush(xs, h.x, room.width_x));
        b.set(Axis::Y, flush(ys, h.y, room.depth_y));
        let z = match element {
            LayoutElement::Ceiling => Interval::point(room.height_z - h.z),
            e if e.is_wall() => free_z,
            _ => Interval::point(h.z),
        };
        b.set(Axis::Z, z);
        return b;
    }
    match element {
        LayoutElement::Floor => b.set(Axis::Z, Interval::point(h.z)),
        LayoutElement::Ceiling => b.set(Axis::Z, Interval::point(room.height_z - h.z)),
        LayoutElement::MiddleOfRoom => {
            let ((x0, x1), (y0, y1)) = room.middle_region();
            b.set(Axis::X, Interval::new(x0, x1));
            b.set(Axis::Y, Interval::new(y0, y1));
            b.set(Axis::Z, Interval::point(h.z));
        }
        wall => {
            let normal = wall.wall_normal().expect("remaining elements are walls");
            let (len, half) = match normal.axis() {
                Axis::X => (room.width_x, h.x),
                _ => (room.depth_y, h.y),
            };
            b.set(normal.axis(), flush(normal, half, len));
            b.set(Axis::Z, free_z);
        }
    }
    b
}
