//! Bundle directories: named artifacts plus an `index.json` with checksums.
//!
//! A design lives under `<root>/<design id>/` with one subdirectory per
//! version (`v1`, `v2`, ...). Versions are written once and never modified.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BundleStage, ComposeError, ReplayOverrides};

pub const INDEX_FILE: &str = "index.json";
/// Artifacts whose content changes from run to run.
pub const VOLATILE: [&str; 1] = ["timings.json"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleStatus {
    Solved,
    Unsat,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: BundleStage,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub parent: String,
    pub stage: BundleStage,
    pub overrides: ReplayOverrides,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub volatile: bool,
}

/// Contents of `index.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleIndex {
    pub version: u32,
    pub status: BundleStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<StageFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay: Option<ReplayRecord>,
    pub artifacts: Vec<ArtifactEntry>,
}

impl BundleIndex {
    pub fn checksum(&self, name: &str) -> Option<&str> {
        self.artifacts.iter().find(|a| a.name == name).map(|a| a.sha256.as_str())
    }
}

/// A bundle in memory: artifact bytes by relative path.
#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub artifacts: BTreeMap<String, Vec<u8>>,
    pub status: BundleStatus,
    pub failure: Option<StageFailure>,
    pub replay: Option<ReplayRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    crate::retrieval::hex(&Sha256::digest(bytes))
}

impl Bundle {
    pub fn new() -> Self {
        Self {
            artifacts: BTreeMap::new(),
            status: BundleStatus::Failed,
            failure: None,
            replay: None,
        }
    }

    pub fn put(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.artifacts.insert(name.to_string(), bytes.into());
    }

    /// Pretty JSON with a trailing newline.
    pub fn put_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) {
        let mut s = serde_json::to_string_pretty(value).expect("bundle artifacts serialize");
        s.push('\n');
        self.put(name, s);
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.artifacts.get(name).map(Vec::as_slice)
    }

    pub fn text(&self, name: &str) -> Result<&str, ComposeError> {
        let bytes = self.get(name).ok_or_else(|| ComposeError::MissingInput(name.into()))?;
        std::str::from_utf8(bytes).map_err(|e| ComposeError::Corrupt {
            artifact: name.into(),
            reason: e.to_string(),
        })
    }

    pub fn json<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<T, ComposeError> {
        serde_json::from_str(self.text(name)?).map_err(|e| ComposeError::Corrupt {
            artifact: name.into(),
            reason: e.to_string(),
        })
    }

    pub fn index(&self, version: u32) -> BundleIndex {
        BundleIndex {
            version,
            status: self.status,
            failure: self.failure.clone(),
            replay: self.replay.clone(),
            artifacts: self
                .artifacts
                .iter()
                .map(|(name, bytes)| ArtifactEntry {
                    name: name.clone(),
                    sha256: sha256_hex(bytes),
                    bytes: bytes.len() as u64,
                    volatile: VOLATILE.contains(&name.as_str()),
                })
                .collect(),
        }
    }
}

impl Default for Bundle {
    fn default() -> Self {
        Self::new()
    }
}

fn io(artifact: impl Into<String>) -> impl FnOnce(std::io::Error) -> ComposeError {
    let artifact = artifact.into();
    move |source| ComposeError::Io { artifact, source }
}

/// Version number of a `v<N>` directory.
pub fn version_of(dir: &Path) -> Option<u32> {
    dir.file_name()?.to_str()?.strip_prefix('v')?.parse().ok()
}

/// The first unused `v<N>` under `design_dir`.
pub fn next_version(design_dir: &Path) -> Result<u32, ComposeError> {
    let mut max = 0;
    if design_dir.is_dir() {
        for entry in fs::read_dir(design_dir).map_err(io(design_dir.display().to_string()))? {
            let entry = entry.map_err(io(design_dir.display().to_string()))?;
            if let Some(v) = version_of(&entry.path()) {
                max = max.max(v);
            }
        }
    }
    Ok(max + 1)
}

/// Writes every artifact and `index.json` into `dir`, which must not exist.
/// Files go to a scratch directory first and are moved into place at once.
pub fn write_bundle(bundle: &Bundle, dir: &Path) -> Result<BundleIndex, ComposeError> {
    if dir.exists() {
        return Err(ComposeError::AlreadyExists(dir.to_path_buf()));
    }
    let version = version_of(dir).unwrap_or(1);
    let parent = dir.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(io(parent.display().to_string()))?;
    let scratch = parent.join(format!(
        ".{}.partial-{}",
        dir.file_name().and_then(|n| n.to_str()).unwrap_or("bundle"),
        std::process::id()
    ));
    let _ = fs::remove_dir_all(&scratch);
    for (name, bytes) in &bundle.artifacts {
        let path = scratch.join(name);
        if let Some(p) = path.parent() {
            fs::create_dir_all(p).map_err(io(name.clone()))?;
        }
        fs::write(&path, bytes).map_err(io(name.clone()))?;
    }
    let index = bundle.index(version);
    let mut text = serde_json::to_string_pretty(&index).expect("index serializes");
    text.push('\n');
    fs::write(scratch.join(INDEX_FILE), text).map_err(io(INDEX_FILE))?;
    fs::rename(&scratch, dir).map_err(io(dir.display().to_string()))?;
    Ok(index)
}

pub fn read_index(dir: &Path) -> Result<BundleIndex, ComposeError> {
    let text = fs::read_to_string(dir.join(INDEX_FILE)).map_err(io(INDEX_FILE))?;
    serde_json::from_str(&text).map_err(|e| ComposeError::Corrupt {
        artifact: INDEX_FILE.into(),
        reason: e.to_string(),
    })
}

/// Loads a bundle and checks every artifact against its recorded checksum.
pub fn read_bundle(dir: &Path) -> Result<(Bundle, BundleIndex), ComposeError> {
    let index = read_index(dir)?;
    let mut bundle = Bundle::new();
    for a in &index.artifacts {
        if a.name.contains("..") || Path::new(&a.name).is_absolute() {
            return Err(ComposeError::Corrupt {
                artifact: a.name.clone(),
                reason: "path escapes the bundle".into(),
            });
        }
        let bytes = fs::read(dir.join(&a.name)).map_err(io(a.name.clone()))?;
        if sha256_hex(&bytes) != a.sha256 {
            return Err(ComposeError::Corrupt {
                artifact: a.name.clone(),
                reason: "checksum mismatch".into(),
            });
        }
        bundle.artifacts.insert(a.name.clone(), bytes);
    }
    bundle.status = index.status;
    bundle.failure = index.failure.clone();
    bundle.replay = index.replay.clone();
    Ok((bundle, index))
}

/// Directory of version `v` of the design in `design_dir`.
pub fn version_dir(design_dir: &Path, v: u32) -> PathBuf {
    design_dir.join(format!("v{v}"))
}
