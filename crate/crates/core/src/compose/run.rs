//! Running stages into a bundle, and replaying them from one.
//!
//! Every stage reads its inputs from bundle artifacts and writes its outputs
//! back, so a fresh design and a replay take the same path.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::bundle::{next_version, read_bundle, version_dir, version_of, write_bundle, Bundle, BundleStatus, ReplayRecord, StageFailure};
use super::{corner_views, export_manifest, render_floor_plan, ComposeError, ManifestMetadata};
use crate::agents::{
    resume_pipeline, DesignRequest, DroppedObject, EngineerOutput, GenerationBackend, ObjectProposal, PipelineConfig,
    PlacementStatement, PriorStages, Prompts, Provenance, Stage, StageTranscript,
};
use crate::eval::{aggregate, scene_metrics};
use crate::retrieval::{fit_asset, retrieve_for_nodes, AssetIndex, Embedder, Retrieval};
use crate::scene::{graph_from_value, parse_graph_document, serialize_graph, GraphDocument, SceneGraph};
use crate::solver::{solve_layout, Layout, SolveError, SolverConfig};

/// Replayable stages, in order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleStage {
    Designer,
    Architect,
    Engineer,
    /// Rule-based correction with the Corrector and Refiner agents.
    CorrectGraph,
    SolveLayout,
    RetrieveAssets,
    Compose,
}

impl BundleStage {
    pub const ALL: [BundleStage; 7] = [
        BundleStage::Designer,
        BundleStage::Architect,
        BundleStage::Engineer,
        BundleStage::CorrectGraph,
        BundleStage::SolveLayout,
        BundleStage::RetrieveAssets,
        BundleStage::Compose,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BundleStage::Designer => "designer",
            BundleStage::Architect => "architect",
            BundleStage::Engineer => "engineer",
            BundleStage::CorrectGraph => "correct_graph",
            BundleStage::SolveLayout => "solve_layout",
            BundleStage::RetrieveAssets => "retrieve_assets",
            BundleStage::Compose => "compose",
        }
    }

    /// Accepts the stage names plus `corrector` and `refiner`.
    pub fn parse(name: &str) -> Option<BundleStage> {
        match name.trim() {
            "corrector" | "refiner" => Some(BundleStage::CorrectGraph),
            n => Self::ALL.into_iter().find(|s| s.as_str() == n),
        }
    }

    /// Artifacts this stage writes.
    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            BundleStage::Designer => &["transcripts/designer.json", "proposals.json"],
            BundleStage::Architect => &["transcripts/architect.json", "statements.json"],
            BundleStage::Engineer => &["transcripts/engineer.json", "engineered.json"],
            BundleStage::CorrectGraph => &[
                "transcripts/corrector.json",
                "transcripts/refiner.json",
                "violations.json",
                "graph.json",
            ],
            BundleStage::SolveLayout => &["layout.json", "floorplan.svg"],
            BundleStage::RetrieveAssets => &["retrievals.json"],
            BundleStage::Compose => &["manifest.json", "metrics.json", "views.json"],
        }
    }

    fn of_agent(stage: Stage) -> BundleStage {
        match stage {
            Stage::Designer => BundleStage::Designer,
            Stage::Architect => BundleStage::Architect,
            Stage::Engineer => BundleStage::Engineer,
            Stage::Corrector | Stage::Refiner => BundleStage::CorrectGraph,
        }
    }

    /// The agent behind this stage, for the stages that call a model.
    pub fn agent(self) -> Option<Stage> {
        match self {
            BundleStage::Designer => Some(Stage::Designer),
            BundleStage::Architect => Some(Stage::Architect),
            BundleStage::Engineer => Some(Stage::Engineer),
            BundleStage::CorrectGraph => Some(Stage::Corrector),
            _ => None,
        }
    }
}

impl std::fmt::Display for BundleStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Settings stored in `config.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    pub pipeline: PipelineConfig,
    pub solver: SolverConfig,
    pub generator: String,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            solver: SolverConfig::default(),
            generator: format!("roomsmith {}", env!("CARGO_PKG_VERSION")),
        }
    }
}

/// Changes applied on replay. They accumulate across versions in
/// `overrides.json`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplayOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Asset id to use for a node, by node id.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub assets: BTreeMap<String, String>,
    /// A scene-graph document replacing `graph.json`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<Value>,
}

impl ReplayOverrides {
    pub fn is_empty(&self) -> bool {
        self == &Self::default()
    }

    fn merged(mut self, newer: &ReplayOverrides) -> ReplayOverrides {
        if newer.seed.is_some() {
            self.seed = newer.seed;
        }
        self.assets.extend(newer.assets.clone());
        // The graph itself lands in graph.json; keep only persistent knobs.
        self.graph = None;
        self
    }
}

/// What stages need besides bundle artifacts.
pub struct RunContext<'a> {
    pub backend: &'a dyn GenerationBackend,
    pub prompts: Prompts,
    pub index: Option<&'a AssetIndex>,
    pub embedder: &'a dyn Embedder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct EngineeredDoc {
    graph: GraphDocument,
    dropped: Vec<DroppedObject>,
    removed_edges: Vec<String>,
    provenance: Vec<Provenance>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexInfo {
    pub checksum: String,
    pub dim: usize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrievalsDoc {
    pub index: Option<IndexInfo>,
    pub items: Vec<Retrieval>,
}

fn transcript_name(stage: Stage) -> String {
    format!("transcripts/{}.json", stage.as_str())
}

fn settings_of(bundle: &Bundle) -> Result<(RunSettings, ReplayOverrides), ComposeError> {
    let settings: RunSettings = bundle.json("config.json")?;
    let overrides = if bundle.get("overrides.json").is_some() {
        bundle.json("overrides.json")?
    } else {
        ReplayOverrides::default()
    };
    Ok((settings, overrides))
}

/// sha256 over `config.json` and the prompt templates.
pub fn config_hash(config_json: &[u8], prompts: &Prompts) -> String {
    let mut bytes = config_json.to_vec();
    for stage in Stage::ALL {
        bytes.push(0);
        bytes.extend_from_slice(prompts.template(stage).as_bytes());
    }
    super::bundle::sha256_hex(&bytes)
}

fn graph_of(bundle: &Bundle) -> Result<SceneGraph, ComposeError> {
    parse_graph_document(bundle.text("graph.json")?).map_err(|e| ComposeError::Corrupt {
        artifact: "graph.json".into(),
        reason: e.to_string(),
    })
}

/// Artifacts a stage reads that an earlier stage writes.
fn required_inputs(stage: BundleStage) -> Vec<&'static str> {
    let mut need = vec!["config.json"];
    if stage <= BundleStage::CorrectGraph {
        need.push("request.json");
        for s in BundleStage::ALL.into_iter().filter(|s| *s < stage) {
            need.extend(s.outputs());
        }
    } else {
        need.push("graph.json");
        if stage > BundleStage::SolveLayout {
            need.push("layout.json");
        }
        if stage > BundleStage::RetrieveAssets {
            need.push("retrievals.json");
        }
    }
    need
}

/// Runs `from` and all later stages, replacing their artifacts.
pub fn run_stages(bundle: &mut Bundle, from: BundleStage, ctx: &RunContext) -> Result<(), ComposeError> {
    for name in required_inputs(from) {
        if bundle.get(name).is_none() {
            return Err(ComposeError::MissingInput(name.into()));
        }
    }
    for s in BundleStage::ALL.into_iter().filter(|s| *s >= from) {
        for name in s.outputs() {
            bundle.artifacts.remove(*name);
        }
    }
    bundle.failure = None;
    let (settings, overrides) = settings_of(bundle)?;
    let mut timings: BTreeMap<String, f64> = BTreeMap::new();

    if from <= BundleStage::CorrectGraph {
        let request: DesignRequest = bundle.json("request.json")?;
        let mut prior = PriorStages::default();
        for stage in Stage::ALL {
            let name = transcript_name(stage);
            if bundle.get(&name).is_some() && BundleStage::of_agent(stage) < from {
                prior.transcripts.push(bundle.json(&name)?);
            }
        }
        if from > BundleStage::Designer {
            prior.proposals = Some(bundle.json::<Vec<ObjectProposal>>("proposals.json")?);
        }
        if from > BundleStage::Architect {
            prior.statements = Some(bundle.json::<Vec<PlacementStatement>>("statements.json")?);
        }
        if from > BundleStage::Engineer {
            let doc: EngineeredDoc = bundle.json("engineered.json")?;
            prior.engineered = Some(EngineerOutput {
                graph: doc.graph.to_graph(),
                dropped: doc.dropped,
                removed_edges: doc.removed_edges,
                provenance: doc.provenance,
            });
        }
        let mut config = settings.pipeline.clone();
        config.prompts = ctx.prompts.clone();
        let agent = from.agent().expect("agent stage");
        let put_transcripts = |bundle: &mut Bundle, ts: &[StageTranscript], timings: &mut BTreeMap<String, f64>| {
            for t in ts.iter().filter(|t| BundleStage::of_agent(t.stage) >= from) {
                bundle.put_json(&transcript_name(t.stage), t);
                timings.insert(t.stage.as_str().into(), t.duration.as_secs_f64());
            }
        };
        match resume_pipeline(&request, &config, ctx.backend, agent, prior) {
            Ok(run) => {
                put_transcripts(bundle, &run.transcripts, &mut timings);
                if from <= BundleStage::Designer {
                    bundle.put_json("proposals.json", &run.proposals);
                }
                if from <= BundleStage::Architect {
                    bundle.put_json("statements.json", &run.statements);
                }
                if from <= BundleStage::Engineer {
                    bundle.put_json(
                        "engineered.json",
                        &EngineeredDoc {
                            graph: GraphDocument::from_graph(&run.engineered),
                            dropped: run.dropped.clone(),
                            removed_edges: run.removed_edges.clone(),
                            provenance: run.provenance.clone(),
                        },
                    );
                }
                bundle.put_json("violations.json", &run.correction);
                bundle.put("graph.json", serialize_graph(&run.graph));
            }
            Err(e) => {
                put_transcripts(bundle, &e.transcripts, &mut timings);
                bundle.status = BundleStatus::Failed;
                bundle.failure = Some(StageFailure {
                    stage: BundleStage::of_agent(e.stage),
                    message: e.error.to_string(),
                });
                bundle.put_json("timings.json", &timings);
                return Ok(());
            }
        }
    }

    let graph = graph_of(bundle)?;
    let layout: Layout = if from <= BundleStage::SolveLayout {
        let mut solver = settings.solver.clone();
        if let Some(seed) = overrides.seed {
            solver.seed = seed;
        }
        let started = Instant::now();
        let solved = solve_layout(&graph, &solver);
        timings.insert("solve_layout".into(), started.elapsed().as_secs_f64());
        match solved {
            Ok(layout) => {
                bundle.put("layout.json", layout.to_json());
                bundle.put("floorplan.svg", render_floor_plan(&layout, &graph)?);
                layout
            }
            Err(SolveError::Unsat(report)) => {
                bundle.put("layout.json", report.partial.to_json());
                bundle.status = BundleStatus::Unsat;
                bundle.failure = Some(StageFailure {
                    stage: BundleStage::SolveLayout,
                    message: SolveError::Unsat(report).to_string(),
                });
                bundle.put_json("timings.json", &timings);
                return Ok(());
            }
            Err(e) => {
                bundle.status = BundleStatus::Failed;
                bundle.failure = Some(StageFailure {
                    stage: BundleStage::SolveLayout,
                    message: e.to_string(),
                });
                bundle.put_json("timings.json", &timings);
                return Ok(());
            }
        }
    } else {
        bundle.json("layout.json")?
    };
    if !layout.is_solved() {
        return Err(ComposeError::UnsolvedLayout);
    }

    let retrievals: Vec<Retrieval> = if from <= BundleStage::RetrieveAssets {
        let started = Instant::now();
        let mut items = retrieve_for_nodes(&graph.nodes, ctx.index, ctx.embedder);
        for r in &mut items {
            let Some(asset) = overrides.assets.get(&r.node_id) else { continue };
            let node = graph.node(&r.node_id).expect("retrievals follow graph nodes");
            r.asset_id = asset.clone();
            r.similarity = None;
            match ctx.index.and_then(|i| i.get(asset)) {
                Some(rec) => {
                    r.fit = fit_asset(rec.dims, node.size);
                    r.fallback_reason = None;
                }
                None => {
                    r.fit = fit_asset(node.size, node.size);
                    r.fallback_reason = Some("overridden asset is not in the index".into());
                }
            }
        }
        timings.insert("retrieve_assets".into(), started.elapsed().as_secs_f64());
        let doc = RetrievalsDoc {
            index: ctx.index.map(|i| IndexInfo {
                checksum: i.checksum().to_string(),
                dim: i.dim(),
                count: i.len(),
            }),
            items,
        };
        bundle.put_json("retrievals.json", &doc);
        doc.items
    } else {
        bundle.json::<RetrievalsDoc>("retrievals.json")?.items
    };

    let metadata = ManifestMetadata {
        seed: layout.seed,
        config_hash: config_hash(bundle.get("config.json").expect("checked above"), &ctx.prompts),
        generator: settings.generator.clone(),
    };
    let manifest = export_manifest(&layout, &retrievals, &graph, metadata)?;
    let scene = scene_metrics(&manifest).map_err(|reason| ComposeError::Corrupt {
        artifact: "manifest.json".into(),
        reason,
    })?;
    bundle.put("manifest.json", manifest.to_json());
    bundle.put("metrics.json", aggregate(&[scene]).to_json());
    bundle.put_json("views.json", &corner_views(layout.room));
    bundle.put_json("timings.json", &timings);
    bundle.status = BundleStatus::Solved;
    Ok(())
}

/// Inputs of a new design, before any stage has run.
pub fn new_design(request: &DesignRequest, settings: &RunSettings) -> Bundle {
    let mut bundle = Bundle::new();
    let mut prompt = request.user_text.trim().to_string();
    prompt.push('\n');
    bundle.put("prompt.txt", prompt);
    bundle.put_json("request.json", request);
    bundle.put_json("config.json", settings);
    bundle
}

/// Inputs of a solve-only bundle for a pre-authored scene graph.
pub fn new_solve(graph_document: &Value, settings: &RunSettings) -> Result<Bundle, ComposeError> {
    let graph = graph_from_value(graph_document).map_err(|e| ComposeError::InvalidOverride(e.to_string()))?;
    let mut bundle = Bundle::new();
    bundle.put_json("config.json", settings);
    bundle.put("graph.json", serialize_graph(&graph));
    Ok(bundle)
}

/// A new bundle for a design brief, run through every stage.
pub fn design_bundle(request: &DesignRequest, settings: &RunSettings, ctx: &RunContext) -> Result<Bundle, ComposeError> {
    let mut bundle = new_design(request, settings);
    run_stages(&mut bundle, BundleStage::Designer, ctx)?;
    Ok(bundle)
}

/// A bundle for a pre-authored scene graph: solve, retrieve and compose only.
pub fn solve_bundle(graph_document: &Value, settings: &RunSettings, ctx: &RunContext) -> Result<Bundle, ComposeError> {
    let mut bundle = new_solve(graph_document, settings)?;
    run_stages(&mut bundle, BundleStage::SolveLayout, ctx)?;
    Ok(bundle)
}

/// Id for a new design: a digest of its inputs (the request, or the graph
/// of a solve-only bundle, plus the settings). The same inputs always map to
/// the same design, so reruns become new versions of it.
pub fn design_id(bundle: &Bundle) -> String {
    let source = if bundle.get("request.json").is_some() { "request.json" } else { "graph.json" };
    let mut bytes = Vec::new();
    for name in [source, "config.json"] {
        if let Some(b) = bundle.get(name) {
            bytes.extend_from_slice(b);
        }
        bytes.push(0);
    }
    format!("d{}", &super::bundle::sha256_hex(&bytes)[..12])
}

/// Writes `bundle` as the next version of its design under `root`.
pub fn store_new(bundle: &Bundle, root: &Path) -> Result<PathBuf, ComposeError> {
    let design = root.join(design_id(bundle));
    let dir = version_dir(&design, next_version(&design)?);
    write_bundle(bundle, &dir)?;
    Ok(dir)
}

/// Re-runs `stage` and everything after it on the bundle at `dir`, writing
/// the result as a new sibling version. The source version is not touched.
pub fn replay_stage(dir: &Path, stage: &str, overrides: &ReplayOverrides, ctx: &RunContext) -> Result<PathBuf, ComposeError> {
    let stage = BundleStage::parse(stage).ok_or_else(|| ComposeError::UnknownStage(stage.to_string()))?;
    let (mut bundle, _) = read_bundle(dir)?;
    if let Some(doc) = &overrides.graph {
        if stage < BundleStage::SolveLayout {
            return Err(ComposeError::InvalidOverride(
                "a graph override needs a replay from solve_layout or later".into(),
            ));
        }
        let graph = graph_from_value(doc).map_err(|e| ComposeError::InvalidOverride(e.to_string()))?;
        bundle.put("graph.json", serialize_graph(&graph));
    }
    let (_, earlier) = settings_of(&bundle)?;
    let merged = earlier.merged(overrides);
    if !merged.is_empty() {
        bundle.put_json("overrides.json", &merged);
    }
    run_stages(&mut bundle, stage, ctx)?;
    let parent = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
    bundle.replay = Some(ReplayRecord {
        parent,
        stage,
        overrides: overrides.clone(),
    });
    let design = dir.parent().ok_or_else(|| ComposeError::MissingInput("design directory".into()))?;
    if version_of(dir).is_none() {
        return Err(ComposeError::MissingInput(format!("{} is not a v<N> bundle directory", dir.display())));
    }
    let out = version_dir(design, next_version(design)?);
    write_bundle(&bundle, &out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_names() {
        for s in BundleStage::ALL {
            assert_eq!(BundleStage::parse(s.as_str()), Some(s));
        }
        assert_eq!(BundleStage::parse("refiner"), Some(BundleStage::CorrectGraph));
        assert_eq!(BundleStage::parse("render"), None);
    }

    #[test]
    fn overrides_accumulate_without_the_graph() {
        let mut a = ReplayOverrides { seed: Some(1), ..Default::default() };
        a.assets.insert("desk_1".into(), "x".into());
        let b = ReplayOverrides { graph: Some(Value::Null), ..Default::default() };
        let m = a.clone().merged(&b);
        assert_eq!(m.seed, Some(1));
        assert_eq!(m.assets, a.assets);
        assert!(m.graph.is_none());
    }
}
