use serde::{Deserialize, Serialize};

use crate::scene::Room;

/// A camera pose for rendering the manifest outside this crate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewDefinition {
    pub name: String,
    pub eye: [f64; 3],
    pub target: [f64; 3],
    pub up: [f64; 3],
    pub fov_deg: f64,
}

const INSET: f64 = 0.1;
const EYE_HEIGHT: f64 = 1.6;

/// Two views from opposite corners, both aimed at the middle of the room.
pub fn corner_views(room: Room) -> Vec<ViewDefinition> {
    let z = EYE_HEIGHT.min(room.height_z - INSET).max(room.height_z / 2.0);
    let target = [room.width_x / 2.0, room.depth_y / 2.0, room.height_z / 3.0];
    let view = |name: &str, x: f64, y: f64| ViewDefinition {
        name: name.into(),
        eye: [x, y, z],
        target,
        up: [0.0, 0.0, 1.0],
        fov_deg: 75.0,
    };
    vec![
        view("southwest_corner", INSET, INSET),
        view("northeast_corner", room.width_x - INSET, room.depth_y - INSET),
    ]
}
