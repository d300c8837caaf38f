use rand::Rng;

use roomsmith::scene::{
    Adjacency, LayoutElement, ObjectNode, Preposition, Room, Rotation, SceneGraph, Size3,
};

const NAMES: [&str; 8] = ["table", "chair", "lamp", "shelf", "crate", "plant", "desk", "stool"];

/// Shape of the random graphs.
#[derive(Clone, Debug)]
pub struct GraphParams {
    pub min_objects: usize,
    pub max_objects: usize,
    /// Room width/depth range in meters, drawn in multiples of `room_step`.
    pub room_xy: (f64, f64),
    pub room_height: (f64, f64),
    pub room_step: f64,
    /// Object side range in meters, drawn in multiples of `size_step`.
    pub size: (f64, f64),
    pub size_step: f64,
    /// Chance that an object after the first hangs off the room rather than
    /// another object.
    pub root_chance: f64,
    pub adjacent_chance: f64,
}

impl GraphParams {
    /// Desk-to-bedroom scale scenes.
    pub fn rooms() -> Self {
        Self {
            min_objects: 5,
            max_objects: 15,
            room_xy: (3.0, 6.0),
            room_height: (2.4, 3.0),
            room_step: 0.1,
            size: (0.2, 1.0),
            size_step: 0.1,
            root_chance: 0.45,
            adjacent_chance: 0.7,
        }
    }

    /// Small, cramped scenes that an exhaustive search can settle.
    pub fn small() -> Self {
        Self {
            min_objects: 2,
            max_objects: 5,
            room_xy: (1.2, 2.4),
            room_height: (1.2, 2.0),
            room_step: 0.2,
            size: (0.2, 0.8),
            size_step: 0.1,
            root_chance: 0.5,
            adjacent_chance: 0.6,
        }
    }
}

fn quantized<R: Rng>(rng: &mut R, (lo, hi): (f64, f64), step: f64) -> f64 {
    let a = (lo / step).round() as i64;
    let b = (hi / step).round() as i64;
    let k = rng.random_range(a..=b);
    (k as f64 * step * 1e6).round() / 1e6
}

const WALLS: [LayoutElement; 4] = [
    LayoutElement::WallNorth,
    LayoutElement::WallSouth,
    LayoutElement::WallEast,
    LayoutElement::WallWest,
];

/// A structurally valid, acyclic graph in which every object is reachable
/// from a layout element. Satisfiability is not guaranteed.
pub fn random_graph<R: Rng>(rng: &mut R, p: &GraphParams) -> SceneGraph {
    let room = Room::new(
        quantized(rng, p.room_xy, p.room_step),
        quantized(rng, p.room_xy, p.room_step),
        quantized(rng, p.room_height, p.room_step),
    );
    let n = rng.random_range(p.min_objects..=p.max_objects);
    let mut g = SceneGraph::new(room);
    let mut counters = [0usize; NAMES.len()];
    for i in 0..n {
        let which = rng.random_range(0..NAMES.len());
        counters[which] += 1;
        let id = format!("{}_{}", NAMES[which], counters[which]);
        let mut size = Size3::new(
            quantized(rng, p.size, p.size_step),
            quantized(rng, p.size, p.size_step),
            quantized(rng, p.size, p.size_step),
        );
        let rotation = Rotation::ALL[rng.random_range(0..4)];

        if i == 0 || rng.random_bool(p.root_chance) {
            g.nodes.push(ObjectNode::new(&id, NAMES[which], size).with_rotation(rotation));
            match rng.random_range(0..20) {
                0..=7 => g = g.with_edge("floor", &id, Preposition::On, Adjacency::Adjacent),
                8..=11 => {
                    g = g.with_edge("middle_of_room", &id, Preposition::On, Adjacency::Adjacent)
                }
                12..=16 => {
                    let wall = WALLS[rng.random_range(0..4)];
                    g = g
                        .with_edge(wall.id(), &id, Preposition::On, Adjacency::Adjacent)
                        .with_edge("floor", &id, Preposition::On, Adjacency::Adjacent);
                }
                _ => {
                    let xw = [LayoutElement::WallEast, LayoutElement::WallWest][rng.random_range(0..2)];
                    let yw = [LayoutElement::WallNorth, LayoutElement::WallSouth][rng.random_range(0..2)];
                    g = g
                        .with_edge(xw.id(), &id, Preposition::InTheCorner, Adjacency::Adjacent)
                        .with_edge(yw.id(), &id, Preposition::InTheCorner, Adjacency::Adjacent)
                        .with_edge("floor", &id, Preposition::On, Adjacency::Adjacent);
                }
            }
            continue;
        }

        let parent = g.nodes[rng.random_range(0..g.nodes.len())].clone();
        let adjacency = if rng.random_bool(p.adjacent_chance) {
            Adjacency::Adjacent
        } else {
            Adjacency::NotAdjacent
        };
        let preposition = if rng.random_bool(0.3) {
            // Shrink the child so it fits on the parent's top.
            let ph = parent.rotation.world_half_extents(parent.size);
            let ch = rotation.world_half_extents(size);
            if ch.x > ph.x || ch.y > ph.y {
                size = Size3::new(p.size.0, p.size.0, size.z);
            }
            Preposition::On
        } else {
            [
                Preposition::LeftOf,
                Preposition::RightOf,
                Preposition::InFront,
                Preposition::Behind,
            ][rng.random_range(0..4)]
        };
        let adjacency = if preposition == Preposition::On {
            Adjacency::Adjacent
        } else {
            adjacency
        };
        g.nodes.push(ObjectNode::new(&id, NAMES[which], size).with_rotation(rotation));
        g = g.with_edge(&parent.id, &id, preposition, adjacency);
    }
    g
}
