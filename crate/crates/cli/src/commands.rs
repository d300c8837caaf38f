//! One function per CLI command. `main` only parses arguments and prints;
//! the work happens here so tests can call the same code directly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use roomsmith::agents::DesignRequest;
use roomsmith::compose::{
    design_bundle, next_version, read_index, replay_stage, solve_bundle, store_new, version_dir, BundleStatus,
    ReplayOverrides, StageFailure, INDEX_FILE,
};
use roomsmith::eval::{compute_metrics, rate_scene, ExcludedScene, MetricsReport, RatingReport, SceneViews, ViewImage};
use roomsmith::retrieval::{index_catalog, retrieve, write_index, AssetIndex, CatalogEntry, Embedder};

use crate::config::{RunConfig, Services};
use crate::CliError;

pub const EXIT_SOLVED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSAT: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

/// Where a run was written and how it ended.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub status: BundleStatus,
    pub failure: Option<StageFailure>,
}

impl RunOutcome {
    fn read(dir: PathBuf) -> Result<RunOutcome, CliError> {
        let index = read_index(&dir)?;
        Ok(RunOutcome {
            dir,
            status: index.status,
            failure: index.failure,
        })
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            BundleStatus::Solved => EXIT_SOLVED,
            BundleStatus::Unsat => EXIT_UNSAT,
            BundleStatus::Failed => EXIT_BACKEND,
        }
    }
}

/// Full pipeline for a design brief; the bundle is written even when a
/// stage fails.
pub fn design(config: &RunConfig, services: &Services, request: &DesignRequest) -> Result<RunOutcome, CliError> {
    services.require_backend()?;
    request.validate().map_err(CliError::Input)?;
    let bundle = design_bundle(request, &config.settings(), &services.ctx())?;
    RunOutcome::read(store_new(&bundle, &config.out_root)?)
}

/// Solve, retrieve and compose for a pre-authored scene-graph document.
pub fn solve(config: &RunConfig, services: &Services, graph_document: &Value) -> Result<RunOutcome, CliError> {
    let bundle = solve_bundle(graph_document, &config.settings(), &services.ctx())?;
    RunOutcome::read(store_new(&bundle, &config.out_root)?)
}

/// Re-runs `stage` onward on the bundle at `dir` into a new version.
pub fn replay(services: &Services, dir: &Path, stage: &str, overrides: &ReplayOverrides) -> Result<RunOutcome, CliError> {
    RunOutcome::read(replay_stage(dir, stage, overrides, &services.ctx())?)
}

/// Resolves an evaluation input to a manifest file: a manifest itself, a
/// directory holding `manifest.json`, or a design directory (latest version).
pub fn manifest_path(input: &Path) -> PathBuf {
    if input.is_file() {
        return input.to_path_buf();
    }
    if !input.join("manifest.json").exists() && !input.join(INDEX_FILE).exists() {
        if let Ok(next) = next_version(input) {
            if next > 1 {
                return version_dir(input, next - 1).join("manifest.json");
            }
        }
    }
    input.join("manifest.json")
}

fn view_images(dir: &Path) -> Result<Vec<ViewImage>, CliError> {
    let views = dir.join("views");
    let mut images = Vec::new();
    let entries = fs::read_dir(&views).map_err(|e| CliError::Input(format!("{}: {e}", views.display())))?;
    for entry in entries {
        let path = entry.map_err(|e| CliError::Input(e.to_string()))?.path();
        let media_type = match path.extension().and_then(|e| e.to_str()) {
            Some("png") => "image/png",
            Some("jpg" | "jpeg") => "image/jpeg",
            _ => continue,
        };
        images.push(ViewImage {
            name: path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string(),
            media_type: media_type.into(),
            data: fs::read(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        });
    }
    images.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(images)
}

/// Metrics over the scenes in `inputs`. With `rate`, each scene directory
/// must also hold `prompt.txt` and two rendered views under `views/`; every
/// scene is graded and the runs are pooled into one rating.
pub fn evaluate(services: &Services, config: &RunConfig, inputs: &[PathBuf], rate: bool) -> Result<MetricsReport, CliError> {
    let mut documents = Vec::new();
    let mut unreadable = Vec::new();
    for input in inputs {
        let path = manifest_path(input);
        match fs::read_to_string(&path) {
            Ok(text) => documents.push((path.display().to_string(), text)),
            Err(e) => unreadable.push(ExcludedScene {
                source: path.display().to_string(),
                error: e.to_string(),
            }),
        }
    }
    let mut report = compute_metrics(&documents);
    report.excluded.extend(unreadable);

    if rate {
        let (Some(client), Some(vision)) = (&services.vision, &config.vision) else {
            return Err(CliError::Config("rating needs a [vision] section".into()));
        };
        let mut runs = Vec::new();
        for (source, _) in &documents {
            let dir = Path::new(source).parent().unwrap_or(Path::new("."));
            let prompt = fs::read_to_string(dir.join("prompt.txt"))
                .map_err(|e| CliError::Input(format!("{}: {e}", dir.join("prompt.txt").display())))?;
            let views = SceneViews::Images(view_images(dir)?);
            let rating = rate_scene(&views, &prompt, client.as_ref(), vision.runs, vision.parallelism)
                .map_err(|e| CliError::Input(format!("{source}: {e}")))?;
            runs.extend(rating.runs);
        }
        if !runs.is_empty() {
            report.rating = Some(RatingReport::from_runs(runs));
        }
    }
    Ok(report)
}

/// Embeds a catalog file (a JSON array of entries) and writes the index.
pub fn build_index(catalog: &Path, embedder: &dyn Embedder, out: &Path) -> Result<AssetIndex, CliError> {
    let text = fs::read_to_string(catalog).map_err(|e| CliError::Input(format!("{}: {e}", catalog.display())))?;
    let entries: Vec<CatalogEntry> =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", catalog.display())))?;
    let index = index_catalog(entries, embedder)?;
    write_index(&index, out)?;
    Ok(index)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub asset_id: String,
    pub name: String,
    pub uri: String,
    pub similarity: f64,
}

/// The `k` assets closest to free text.
pub fn search(index: &AssetIndex, embedder: &dyn Embedder, query: &str, k: usize) -> Result<Vec<SearchHit>, CliError> {
    let query = query.trim();
    if query.is_empty() {
        return Err(CliError::Input("empty query".into()));
    }
    let vector = embedder
        .embed(&[query.to_string()])?
        .pop()
        .ok_or_else(|| CliError::Input("embedder returned no vector".into()))?;
    let hits = retrieve(index, &vector, k)?;
    Ok(hits
        .into_iter()
        .map(|h| {
            let r = index.get(&h.asset_id).expect("hit comes from the index");
            SearchHit {
                asset_id: h.asset_id,
                name: r.name.clone(),
                uri: r.uri.clone(),
                similarity: h.similarity,
            }
        })
        .collect())
}

/// Parses `node=asset` pairs given on the command line.
pub fn parse_asset_overrides(pairs: &[String]) -> Result<BTreeMap<String, String>, CliError> {
    pairs
        .iter()
        .map(|p| match p.split_once('=') {
            Some((node, asset)) if !node.is_empty() && !asset.is_empty() => Ok((node.to_string(), asset.to_string())),
            _ => Err(CliError::Input(format!("expected NODE=ASSET, got \"{p}\""))),
        })
        .collect()
}

/// Parses `W,D,H` room dimensions in meters.
pub fn parse_room(text: &str) -> Result<roomsmith::scene::Room, CliError> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Input(format!("room must be W,D,H in meters, got \"{text}\"")))?;
    match parts[..] {
        [w, d, h] => Ok(roomsmith::scene::Room::new(w, d, h)),
        _ => Err(CliError::Input(format!("room must be W,D,H in meters, got \"{text}\""))),
    }
}
