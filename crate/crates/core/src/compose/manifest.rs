use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ComposeError;
use crate::retrieval::{fit_asset, placeholder_id, Retrieval};
use crate::scene::{Aabb, Room, Rotation, SceneGraph, Size3, Vec3};
use crate::schema::{SchemaValidator, MANIFEST_SCHEMA};
use crate::solver::Layout;

/// Everything a renderer needs to build the scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub room: Room,
    /// Sorted by node id.
    pub entries: Vec<ManifestEntry>,
    pub metadata: ManifestMetadata,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub node_id: String,
    pub name: String,
    pub asset_id: String,
    /// Box center in room coordinates.
    pub position: [f64; 3],
    /// Clockwise degrees about +z.
    pub rotation: u16,
    /// Per-axis factors applied to the asset's native box.
    pub scale: [f64; 3],
    /// Box size in the object's own frame, before rotation.
    pub bbox: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestMetadata {
    pub seed: u64,
    pub config_hash: String,
    pub generator: String,
}

impl ManifestEntry {
    pub fn world_box(&self) -> Result<Aabb, String> {
        let rotation = Rotation::from_degrees(i64::from(self.rotation))
            .ok_or_else(|| format!("{}: rotation {} is not a quarter turn", self.node_id, self.rotation))?;
        let [x, y, z] = self.position;
        let [sx, sy, sz] = self.bbox;
        Ok(Aabb::of_object(Vec3::new(x, y, z), Size3::new(sx, sy, sz), rotation))
    }
}

pub fn manifest_validator() -> &'static SchemaValidator {
    use std::sync::OnceLock;
    static V: OnceLock<SchemaValidator> = OnceLock::new();
    V.get_or_init(|| SchemaValidator::from_text(MANIFEST_SCHEMA).expect("manifest schema compiles"))
}

impl SceneManifest {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifests serialize");
        s.push('\n');
        s
    }

    /// Schema-checks and parses a manifest document.
    pub fn parse(text: &str) -> Result<Self, String> {
        let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        manifest_validator().validate(&value).map_err(|e| e.join("; "))?;
        serde_json::from_value(value).map_err(|e| e.to_string())
    }
}

/// One entry per placed node. Nodes without a retrieval get a placeholder
/// asset at unit scale.
pub fn export_manifest(
    layout: &Layout,
    retrievals: &[Retrieval],
    graph: &SceneGraph,
    metadata: ManifestMetadata,
) -> Result<SceneManifest, ComposeError> {
    if !layout.is_solved() {
        return Err(ComposeError::UnsolvedLayout);
    }
    let mut entries = Vec::with_capacity(layout.placements.len());
    for (id, p) in &layout.placements {
        let node = graph
            .node(id)
            .ok_or_else(|| ComposeError::MissingInput(format!("graph node for placement {id}")))?;
        let (asset_id, scale) = match retrievals.iter().find(|r| &r.node_id == id) {
            Some(r) => (r.asset_id.clone(), r.fit.scale),
            None => (placeholder_id(id), fit_asset(node.size, node.size).scale),
        };
        entries.push(ManifestEntry {
            node_id: id.clone(),
            name: node.name.clone(),
            asset_id,
            position: [p.position.x, p.position.y, p.position.z],
            rotation: p.rotation.degrees(),
            scale,
            bbox: [node.size.x, node.size.y, node.size.z],
        });
    }
    Ok(SceneManifest {
        room: layout.room,
        entries,
        metadata,
    })
}
