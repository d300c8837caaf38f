use serde::{Deserialize, Serialize};

use crate::compose::SceneManifest;
use crate::scene::Aabb;

/// Protrusion past a wall, floor or ceiling that still counts as inside.
pub const OOB_TOLERANCE: f64 = 1e-3;

/// A manifest that could not be scored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcludedScene {
    pub source: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_scenes: usize,
    /// Mean objects per scene.
    pub nobj: f64,
    /// Percent of scenes with any box outside the room.
    pub oob_rate: f64,
    /// Mean over scenes of the summed pairwise intersection volume, m³.
    pub bbl: f64,
    pub excluded: Vec<ExcludedScene>,
    #[serde(default)]
    pub rating: Option<super::RatingReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub n_objects: usize,
    pub out_of_bounds: bool,
    pub overlap_volume: f64,
}

/// Sum of values in ascending order, so the result does not depend on the
/// order they arrive in.
fn stable_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.into_iter().sum()
}

pub fn scene_metrics(manifest: &SceneManifest) -> Result<SceneMetrics, String> {
    let boxes: Vec<Aabb> = manifest
        .entries
        .iter()
        .map(|e| e.world_box())
        .collect::<Result<_, _>>()?;
    let room = manifest.room.bounds();
    let out_of_bounds = boxes.iter().any(|b| !b.within(&room, OOB_TOLERANCE));
    let mut volumes = Vec::new();
    for (i, a) in boxes.iter().enumerate() {
        for b in &boxes[i + 1..] {
            volumes.push(a.intersection_volume(b));
        }
    }
    Ok(SceneMetrics {
        n_objects: boxes.len(),
        out_of_bounds,
        overlap_volume: stable_sum(volumes),
    })
}

/// Scores a set of manifest documents given as `(source, text)`. Documents
/// that fail to parse are listed in `excluded` and left out of the means.
pub fn compute_metrics<S: AsRef<str>, T: AsRef<str>>(documents: &[(S, T)]) -> MetricsReport {
    let mut scenes = Vec::new();
    let mut excluded = Vec::new();
    for (source, text) in documents {
        match SceneManifest::parse(text.as_ref()).and_then(|m| scene_metrics(&m)) {
            Ok(m) => scenes.push(m),
            Err(error) => excluded.push(ExcludedScene {
                source: source.as_ref().to_string(),
                error,
            }),
        }
    }
    let mut report = aggregate(&scenes);
    report.excluded = excluded;
    report
}

pub fn aggregate(scenes: &[SceneMetrics]) -> MetricsReport {
    let n = scenes.len();
    let mean = |values: Vec<f64>| if n == 0 { 0.0 } else { stable_sum(values) / n as f64 };
    MetricsReport {
        n_scenes: n,
        nobj: mean(scenes.iter().map(|s| s.n_objects as f64).collect()),
        oob_rate: 100.0 * mean(scenes.iter().map(|s| if s.out_of_bounds { 1.0 } else { 0.0 }).collect()),
        bbl: mean(scenes.iter().map(|s| s.overlap_volume).collect()),
        excluded: Vec::new(),
        rating: None,
    }
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }
}
