//! Frame conventions and axis-aligned boxes.
//!
//! World frame: origin at the room's southwest floor corner, +x east, +y north,
//! +z up. An object at rotation 0 faces north (+y); rotations are compass
//! bearings measured clockwise, so rotation 90 faces east.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    pub fn set(&mut self, axis: Axis, value: f64) {
        match axis {
            Axis::X => self.x = value,
            Axis::Y => self.y = value,
            Axis::Z => self.z = value,
        }
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

/// Bounding-box dimensions in an object's local frame: `x` is the object's
/// width (left to right), `y` its depth (back to front), `z` its height.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Size3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Size3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_positive(&self) -> bool {
        self.x > 0.0 && self.y > 0.0 && self.z > 0.0
    }
}

impl From<[f64; 3]> for Size3 {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<Size3> for [f64; 3] {
    fn from(v: Size3) -> Self {
        [v.x, v.y, v.z]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// One of the four horizontal world directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir2 {
    PosX,
    NegX,
    PosY,
    NegY,
}

impl Dir2 {
    pub fn axis(self) -> Axis {
        match self {
            Dir2::PosX | Dir2::NegX => Axis::X,
            Dir2::PosY | Dir2::NegY => Axis::Y,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Dir2::PosX | Dir2::PosY => 1.0,
            Dir2::NegX | Dir2::NegY => -1.0,
        }
    }

    pub fn opposite(self) -> Dir2 {
        match self {
            Dir2::PosX => Dir2::NegX,
            Dir2::NegX => Dir2::PosX,
            Dir2::PosY => Dir2::NegY,
            Dir2::NegY => Dir2::PosY,
        }
    }

    /// Rotates clockwise (seen from above) by `quarters` quarter turns.
    pub fn rotate_cw(self, quarters: u8) -> Dir2 {
        let mut d = self;
        for _ in 0..(quarters % 4) {
            d = match d {
                Dir2::PosY => Dir2::PosX,
                Dir2::PosX => Dir2::NegY,
                Dir2::NegY => Dir2::NegX,
                Dir2::NegX => Dir2::PosY,
            };
        }
        d
    }

    /// The horizontal axis perpendicular to this direction.
    pub fn lateral_axis(self) -> Axis {
        match self.axis() {
            Axis::X => Axis::Y,
            _ => Axis::X,
        }
    }

    pub const ALL: [Dir2; 4] = [Dir2::PosX, Dir2::NegX, Dir2::PosY, Dir2::NegY];
}

/// Rotation about +z, restricted to the four cardinal values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum Rotation {
    #[default]
    Deg0,
    Deg90,
    Deg180,
    Deg270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [
        Rotation::Deg0,
        Rotation::Deg90,
        Rotation::Deg180,
        Rotation::Deg270,
    ];

    pub fn from_degrees(deg: i64) -> Option<Rotation> {
        match deg.rem_euclid(360) {
            0 => Some(Rotation::Deg0),
            90 => Some(Rotation::Deg90),
            180 => Some(Rotation::Deg180),
            270 => Some(Rotation::Deg270),
            _ => None,
        }
    }

    pub fn degrees(self) -> u16 {
        self.quarters() as u16 * 90
    }

    pub fn quarters(self) -> u8 {
        match self {
            Rotation::Deg0 => 0,
            Rotation::Deg90 => 1,
            Rotation::Deg180 => 2,
            Rotation::Deg270 => 3,
        }
    }

    /// World direction the object faces.
    pub fn front(self) -> Dir2 {
        Dir2::PosY.rotate_cw(self.quarters())
    }

    /// World direction of the object's own right-hand side.
    pub fn right(self) -> Dir2 {
        Dir2::PosX.rotate_cw(self.quarters())
    }

    /// Maps a direction expressed in the object's local frame to the world frame.
    pub fn to_world(self, local: Dir2) -> Dir2 {
        local.rotate_cw(self.quarters())
    }

    /// Inverse of [`Rotation::to_world`].
    pub fn to_local(self, world: Dir2) -> Dir2 {
        world.rotate_cw(4 - self.quarters())
    }

    pub fn swaps_axes(self) -> bool {
        matches!(self, Rotation::Deg90 | Rotation::Deg270)
    }

    /// Half extents of a local-frame size once rotated into the world frame.
    pub fn world_half_extents(self, size: Size3) -> Vec3 {
        if self.swaps_axes() {
            Vec3::new(size.y / 2.0, size.x / 2.0, size.z / 2.0)
        } else {
            Vec3::new(size.x / 2.0, size.y / 2.0, size.z / 2.0)
        }
    }

    pub fn from_facing(facing: Facing) -> Rotation {
        match facing {
            Facing::North => Rotation::Deg0,
            Facing::East => Rotation::Deg90,
            Facing::South => Rotation::Deg180,
            Facing::West => Rotation::Deg270,
        }
    }

    pub fn facing(self) -> Facing {
        match self {
            Rotation::Deg0 => Facing::North,
            Rotation::Deg90 => Facing::East,
            Rotation::Deg180 => Facing::South,
            Rotation::Deg270 => Facing::West,
        }
    }
}

impl Serialize for Rotation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u16(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let deg = f64::deserialize(d)?;
        if deg.fract() != 0.0 {
            return Err(serde::de::Error::custom(format!(
                "rotation must be one of 0, 90, 180, 270 (got {deg})"
            )));
        }
        Rotation::from_degrees(deg as i64).ok_or_else(|| {
            serde::de::Error::custom(format!("rotation must be one of 0, 90, 180, 270 (got {deg})"))
        })
    }
}

/// The wall an object faces, in the vocabulary the agents use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Facing {
    #[serde(rename = "north_wall")]
    North,
    #[serde(rename = "east_wall")]
    East,
    #[serde(rename = "south_wall")]
    South,
    #[serde(rename = "west_wall")]
    West,
}

impl Facing {
    pub fn as_str(self) -> &'static str {
        match self {
            Facing::North => "north_wall",
            Facing::East => "east_wall",
            Facing::South => "south_wall",
            Facing::West => "west_wall",
        }
    }

    /// Accepts "north_wall", "wall_north", "north wall", "the north wall", "north".
    pub fn parse_lenient(text: &str) -> Option<Facing> {
        let t = text.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let t = t.trim_start_matches("the_");
        let t = t
            .trim_start_matches("facing_")
            .trim_start_matches("wall_")
            .trim_end_matches("_wall");
        match t {
            "north" => Some(Facing::North),
            "east" => Some(Facing::East),
            "south" => Some(Facing::South),
            "west" => Some(Facing::West),
            _ => None,
        }
    }
}

impl fmt::Display for Facing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Axis-aligned box in world coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn from_center(center: Vec3, half: Vec3) -> Self {
        Self {
            min: Vec3::new(center.x - half.x, center.y - half.y, center.z - half.z),
            max: Vec3::new(center.x + half.x, center.y + half.y, center.z + half.z),
        }
    }

    /// Box of an object with the given local size, rotation and center.
    pub fn of_object(center: Vec3, size: Size3, rotation: Rotation) -> Self {
        Self::from_center(center, rotation.world_half_extents(size))
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(
            (self.min.x + self.max.x) / 2.0,
            (self.min.y + self.max.y) / 2.0,
            (self.min.z + self.max.z) / 2.0,
        )
    }

    pub fn extent(&self, axis: Axis) -> f64 {
        self.max.get(axis) - self.min.get(axis)
    }

    /// Length of the overlap of the two boxes' projections on `axis` (0 when disjoint).
    pub fn overlap_along(&self, other: &Aabb, axis: Axis) -> f64 {
        let lo = self.min.get(axis).max(other.min.get(axis));
        let hi = self.max.get(axis).min(other.max.get(axis));
        (hi - lo).max(0.0)
    }

    pub fn intersection_volume(&self, other: &Aabb) -> f64 {
        self.overlap_along(other, Axis::X)
            * self.overlap_along(other, Axis::Y)
            * self.overlap_along(other, Axis::Z)
    }

    /// True when `self` lies inside `outer`, allowing `tol` of protrusion per face.
    pub fn within(&self, outer: &Aabb, tol: f64) -> bool {
        [Axis::X, Axis::Y, Axis::Z].into_iter().all(|a| {
            self.min.get(a) >= outer.min.get(a) - tol && self.max.get(a) <= outer.max.get(a) + tol
        })
    }
}
