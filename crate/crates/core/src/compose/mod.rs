//! Output bundles: floor plan, scene manifest and every intermediate
//! artifact, with stage replay.

mod bundle;
mod floorplan;
mod manifest;
mod run;
mod views;

use std::path::PathBuf;

pub use bundle::{
    next_version, read_bundle, read_index, sha256_hex, version_dir, version_of, write_bundle, ArtifactEntry, Bundle,
    BundleIndex, BundleStatus, ReplayRecord, StageFailure, INDEX_FILE, VOLATILE,
};
pub use floorplan::{render_floor_plan, PX_PER_METER};
pub use manifest::{export_manifest, manifest_validator, ManifestEntry, ManifestMetadata, SceneManifest};
pub use run::{
    config_hash, design_bundle, design_id, new_design, new_solve, replay_stage, run_stages, solve_bundle, store_new,
    BundleStage, IndexInfo,
    ReplayOverrides, RetrievalsDoc, RunContext, RunSettings,
};
pub use views::{corner_views, ViewDefinition};

#[derive(Debug, thiserror::Error)]
pub enum ComposeError {
    #[error("layout is not solved")]
    UnsolvedLayout,
    #[error("unknown stage \"{0}\"")]
    UnknownStage(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("invalid override: {0}")]
    InvalidOverride(String),
    #[error("{artifact}: {reason}")]
    Corrupt { artifact: String, reason: String },
    #[error("{artifact}: {source}")]
    Io {
        artifact: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{} already exists; bundle versions are never overwritten", .0.display())]
    AlreadyExists(PathBuf),
}
