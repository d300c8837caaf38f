use std::fmt;

use serde::{Deserialize, Serialize};

use super::geometry::{Aabb, Dir2, Rotation, Size3, Vec3};

/// Room dimensions in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub width_x: f64,
    pub depth_y: f64,
    pub height_z: f64,
}

impl Room {
    pub fn new(width_x: f64, depth_y: f64, height_z: f64) -> Self {
        Self {
            width_x,
            depth_y,
            height_z,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.width_x > 0.0 && self.depth_y > 0.0 && self.height_z > 0.0
    }

    pub fn bounds(&self) -> Aabb {
        Aabb {
            min: Vec3::new(0.0, 0.0, 0.0),
            max: Vec3::new(self.width_x, self.depth_y, self.height_z),
        }
    }

    /// The middle region: the central 50% of the floor along each axis.
    pub fn middle_region(&self) -> ((f64, f64), (f64, f64)) {
        (
            (self.width_x * 0.25, self.width_x * 0.75),
            (self.depth_y * 0.25, self.depth_y * 0.75),
        )
    }
}

/// Fixed room elements that act as graph roots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayoutElement {
    Floor,
    Ceiling,
    WallNorth,
    WallSouth,
    WallEast,
    WallWest,
    MiddleOfRoom,
}

impl LayoutElement {
    pub const ALL: [LayoutElement; 7] = [
        LayoutElement::Floor,
        LayoutElement::Ceiling,
        LayoutElement::WallNorth,
        LayoutElement::WallSouth,
        LayoutElement::WallEast,
        LayoutElement::WallWest,
        LayoutElement::MiddleOfRoom,
    ];

    pub fn id(self) -> &'static str {
        match self {
            LayoutElement::Floor => "floor",
            LayoutElement::Ceiling => "ceiling",
            LayoutElement::WallNorth => "wall_north",
            LayoutElement::WallSouth => "wall_south",
            LayoutElement::WallEast => "wall_east",
            LayoutElement::WallWest => "wall_west",
            LayoutElement::MiddleOfRoom => "middle_of_room",
        }
    }

    pub fn from_id(id: &str) -> Option<LayoutElement> {
        LayoutElement::ALL.into_iter().find(|e| e.id() == id)
    }

    /// Accepts the canonical ids plus the phrasing agents tend to use
    /// ("south_wall", "the middle of the room", "middle of the floor").
    pub fn parse_lenient(text: &str) -> Option<LayoutElement> {
        let t = text.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let t = t.trim_start_matches("the_");
        if let Some(e) = LayoutElement::from_id(t) {
            return Some(e);
        }
        match t {
            "north_wall" => Some(LayoutElement::WallNorth),
            "south_wall" => Some(LayoutElement::WallSouth),
            "east_wall" => Some(LayoutElement::WallEast),
            "west_wall" => Some(LayoutElement::WallWest),
            "middle_of_the_room" | "middle_of_the_floor" | "middle" | "center_of_the_room"
            | "middle_of_floor" => Some(LayoutElement::MiddleOfRoom),
            _ => None,
        }
    }

    pub fn is_wall(self) -> bool {
        self.wall_normal().is_some()
    }

    /// Outward direction from the room interior toward this wall.
    pub fn wall_normal(self) -> Option<Dir2> {
        match self {
            LayoutElement::WallNorth => Some(Dir2::PosY),
            LayoutElement::WallSouth => Some(Dir2::NegY),
            LayoutElement::WallEast => Some(Dir2::PosX),
            LayoutElement::WallWest => Some(Dir2::NegX),
            _ => None,
        }
    }

    pub fn wall_toward(dir: Dir2) -> LayoutElement {
        match dir {
            Dir2::PosY => LayoutElement::WallNorth,
            Dir2::NegY => LayoutElement::WallSouth,
            Dir2::PosX => LayoutElement::WallEast,
            Dir2::NegX => LayoutElement::WallWest,
        }
    }
}

impl fmt::Display for LayoutElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

pub fn is_layout_id(id: &str) -> bool {
    LayoutElement::from_id(id).is_some()
}

/// Spatial relation carried by an edge, always read as "child <preposition> parent".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Preposition {
    #[serde(rename = "on")]
    On,
    #[serde(rename = "left of")]
    LeftOf,
    #[serde(rename = "right of")]
    RightOf,
    #[serde(rename = "in front")]
    InFront,
    #[serde(rename = "behind")]
    Behind,
    #[serde(rename = "under")]
    Under,
    #[serde(rename = "above")]
    Above,
    #[serde(rename = "in the corner")]
    InTheCorner,
}

impl Preposition {
    pub const ALL: [Preposition; 8] = [
        Preposition::On,
        Preposition::LeftOf,
        Preposition::RightOf,
        Preposition::InFront,
        Preposition::Behind,
        Preposition::Under,
        Preposition::Above,
        Preposition::InTheCorner,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Preposition::On => "on",
            Preposition::LeftOf => "left of",
            Preposition::RightOf => "right of",
            Preposition::InFront => "in front",
            Preposition::Behind => "behind",
            Preposition::Under => "under",
            Preposition::Above => "above",
            Preposition::InTheCorner => "in the corner",
        }
    }

    pub fn parse_lenient(text: &str) -> Option<Preposition> {
        let t = text.trim().to_ascii_lowercase().replace(['_', '-'], " ");
        let t = t.split_whitespace().collect::<Vec<_>>().join(" ");
        let t = t.trim_start_matches("on the ").trim_end_matches(" the");
        match t {
            "on" | "on top of" | "against" => Some(Preposition::On),
            "left of" | "left" | "to the left of" | "left of the" => Some(Preposition::LeftOf),
            "right of" | "right" | "to the right of" => Some(Preposition::RightOf),
            "in front" | "in front of" | "front" => Some(Preposition::InFront),
            "behind" | "back of" => Some(Preposition::Behind),
            "under" | "below" | "beneath" => Some(Preposition::Under),
            "above" | "over" => Some(Preposition::Above),
            "in the corner" | "in corner" | "corner" | "in the corner of" => {
                Some(Preposition::InTheCorner)
            }
            _ => None,
        }
    }

    /// Allowed when the parent is a room layout element.
    pub fn allowed_for_layout_parent(self) -> bool {
        matches!(self, Preposition::On | Preposition::InTheCorner)
    }

    /// Allowed when the parent is another object.
    pub fn allowed_for_object_parent(self) -> bool {
        self != Preposition::InTheCorner
    }

    /// The horizontal side of the parent (in the parent's local frame) a
    /// lateral preposition places the child on.
    pub fn local_side(self) -> Option<Dir2> {
        match self {
            Preposition::LeftOf => Some(Dir2::NegX),
            Preposition::RightOf => Some(Dir2::PosX),
            Preposition::InFront => Some(Dir2::PosY),
            Preposition::Behind => Some(Dir2::NegY),
            _ => None,
        }
    }

    pub fn is_lateral(self) -> bool {
        self.local_side().is_some()
    }

    /// Lateral preposition whose local side is `side`.
    pub fn from_local_side(side: Dir2) -> Preposition {
        match side {
            Dir2::NegX => Preposition::LeftOf,
            Dir2::PosX => Preposition::RightOf,
            Dir2::PosY => Preposition::InFront,
            Dir2::NegY => Preposition::Behind,
        }
    }
}

impl fmt::Display for Preposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjacency {
    Adjacent,
    NotAdjacent,
}

impl Adjacency {
    pub fn parse_lenient(text: &str) -> Option<Adjacency> {
        let t = text.trim().to_ascii_lowercase().replace(['_', '-'], " ");
        match t.as_str() {
            "adjacent" | "yes" | "true" => Some(Adjacency::Adjacent),
            "not adjacent" | "non adjacent" | "no" | "false" | "distant" => {
                Some(Adjacency::NotAdjacent)
            }
            _ => None,
        }
    }
}

/// Clearance around an object's center, in the object's local frame,
/// covering the object itself and everything placed relative to it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterExtents {
    pub x_neg: f64,
    pub x_pos: f64,
    pub y_neg: f64,
    pub y_pos: f64,
}

impl ClusterExtents {
    pub fn get(&self, side: Dir2) -> f64 {
        match side {
            Dir2::NegX => self.x_neg,
            Dir2::PosX => self.x_pos,
            Dir2::NegY => self.y_neg,
            Dir2::PosY => self.y_pos,
        }
    }

    pub fn set(&mut self, side: Dir2, value: f64) {
        match side {
            Dir2::NegX => self.x_neg = value,
            Dir2::PosX => self.x_pos = value,
            Dir2::NegY => self.y_neg = value,
            Dir2::PosY => self.y_pos = value,
        }
    }

    /// Symmetric extents equal to the given half sizes.
    pub fn symmetric(hx: f64, hy: f64) -> Self {
        Self {
            x_neg: hx,
            x_pos: hx,
            y_neg: hy,
            y_pos: hy,
        }
    }

    /// Re-expresses local-frame extents in the world frame for an object at `rotation`.
    pub fn to_world(&self, rotation: Rotation) -> ClusterExtents {
        let mut out = *self;
        for local in Dir2::ALL {
            out.set(rotation.to_world(local), self.get(local));
        }
        out
    }

    pub fn from_world(world: &ClusterExtents, rotation: Rotation) -> ClusterExtents {
        let mut out = *world;
        for w in Dir2::ALL {
            out.set(rotation.to_local(w), world.get(w));
        }
        out
    }
}

/// One furniture instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectNode {
    pub id: String,
    pub name: String,
    pub style: String,
    pub material: String,
    pub size: Size3,
    pub rotation: Rotation,
    pub position: Option<Vec3>,
    pub cluster_extents: Option<ClusterExtents>,
}

impl ObjectNode {
    pub fn new(id: impl Into<String>, name: impl Into<String>, size: Size3) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            style: String::new(),
            material: String::new(),
            size,
            rotation: Rotation::Deg0,
            position: None,
            cluster_extents: None,
        }
    }

    pub fn with_rotation(mut self, rotation: Rotation) -> Self {
        self.rotation = rotation;
        self
    }

    pub fn with_style(mut self, style: impl Into<String>, material: impl Into<String>) -> Self {
        self.style = style.into();
        self.material = material.into();
        self
    }

    /// Style and material as one phrase, e.g. "modern walnut".
    pub fn style_material(&self) -> String {
        [self.style.trim(), self.material.trim()]
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn half_extents(&self) -> Vec3 {
        self.rotation.world_half_extents(self.size)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub parent: String,
    pub child: String,
    pub preposition: Preposition,
    pub adjacency: Adjacency,
}

impl Edge {
    pub fn new(
        parent: impl Into<String>,
        child: impl Into<String>,
        preposition: Preposition,
        adjacency: Adjacency,
    ) -> Self {
        Self {
            parent: parent.into(),
            child: child.into(),
            preposition,
            adjacency,
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({} -> {}, {}, {})",
            self.parent,
            self.child,
            self.preposition,
            match self.adjacency {
                Adjacency::Adjacent => "adjacent",
                Adjacency::NotAdjacent => "not adjacent",
            }
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneGraph {
    pub room: Room,
    pub nodes: Vec<ObjectNode>,
    pub edges: Vec<Edge>,
}

impl SceneGraph {
    pub fn new(room: Room) -> Self {
        Self {
            room,
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn with_node(mut self, node: ObjectNode) -> Self {
        self.nodes.push(node);
        self
    }

    pub fn with_edge(
        mut self,
        parent: &str,
        child: &str,
        preposition: Preposition,
        adjacency: Adjacency,
    ) -> Self {
        self.edges
            .push(Edge::new(parent, child, preposition, adjacency));
        self
    }

    pub fn node(&self, id: &str) -> Option<&ObjectNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut ObjectNode> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        is_layout_id(id) || self.node(id).is_some()
    }

    pub fn inbound<'a>(&'a self, child: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.child == child)
    }

    pub fn outbound<'a>(&'a self, parent: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.parent == parent)
    }

    /// Removes a node and every edge touching it.
    pub fn remove_node(&mut self, id: &str) -> Option<ObjectNode> {
        let idx = self.nodes.iter().position(|n| n.id == id)?;
        self.edges.retain(|e| e.parent != id && e.child != id);
        Some(self.nodes.remove(idx))
    }

    pub fn object_ids(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }
}
