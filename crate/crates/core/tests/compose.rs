use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use roomsmith::agents::{CannedBackend, DesignRequest, Prompts};
use roomsmith::compose::{
    design_bundle, export_manifest, read_bundle, render_floor_plan, replay_stage, solve_bundle, store_new,
    BundleStage, BundleStatus, ComposeError, ManifestMetadata, ReplayOverrides, RunContext, RunSettings,
    SceneManifest, VOLATILE,
};
use roomsmith::corrector::correct_graph;
use roomsmith::retrieval::{retrieve_for_nodes, AssetIndex, HashingEmbedder};
use roomsmith::scene::{
    parse_graph_document, LayoutElement, ObjectNode, Preposition, Adjacency, Room, Rotation, SceneGraph, Size3, Vec3,
};
use roomsmith::solver::{solve_layout, Layout, LayoutStats, Placement, SolveStatus, SolverConfig};
use roomsmith_testkit::assets::{catalog_index, fixtures_dir, CATALOG_DIM};
use roomsmith_testkit::{random_graph, GraphParams};

fn layout_of(room: Room, placements: &[(&str, Vec3, Rotation)]) -> Layout {
    Layout {
        room,
        status: SolveStatus::Solved,
        seed: 0,
        placements: placements
            .iter()
            .map(|(id, position, rotation)| (id.to_string(), Placement { position: *position, rotation: *rotation }))
            .collect(),
        stats: LayoutStats::default(),
    }
}

/// `(id, corners in meters)` for every object polygon in a floor plan.
fn parse_polygons(svg: &str, room: Room) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut out = Vec::new();
    for chunk in svg.split("<g class=\"object\" data-id=\"").skip(1) {
        let id = chunk[..chunk.find('"').unwrap()].to_string();
        let pts = chunk.split("points=\"").nth(1).unwrap();
        let pts = &pts[..pts.find('"').unwrap()];
        let corners = pts
            .split(' ')
            .map(|p| {
                let (x, y) = p.split_once(',').unwrap();
                let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
                (x / 100.0, room.depth_y - y / 100.0)
            })
            .collect();
        out.push((id, corners));
    }
    out
}

fn bounds(c: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    let xs = c.iter().map(|p| p.0);
    let ys = c.iter().map(|p| p.1);
    (
        xs.clone().fold(f64::MAX, f64::min),
        ys.clone().fold(f64::MAX, f64::min),
        xs.fold(f64::MIN, f64::max),
        ys.fold(f64::MIN, f64::max),
    )
}

#[test]
fn empty_plan_is_just_the_room() {
    let room = Room::new(4.0, 3.0, 2.5);
    let svg = render_floor_plan(&layout_of(room, &[]), &SceneGraph::new(room)).unwrap();
    assert!(svg.contains(r#"<rect class="room" x="0.00" y="0.00" width="400.00" height="300.00""#));
    assert!(!svg.contains("<g"));
}

#[test]
fn centered_bed_corners_parse_back() {
    let room = Room::new(4.0, 3.0, 2.5);
    let g = SceneGraph::new(room).with_node(ObjectNode::new("bed_1", "bed", Size3::new(2.0, 1.6, 0.5)));
    let layout = layout_of(room, &[("bed_1", Vec3::new(2.0, 1.5, 0.25), Rotation::Deg0)]);
    let svg = render_floor_plan(&layout, &g).unwrap();
    let polys = parse_polygons(&svg, room);
    assert_eq!(polys.len(), 1);
    let (x0, y0, x1, y1) = bounds(&polys[0].1);
    for (got, want) in [(x0, 1.0), (y0, 0.7), (x1, 3.0), (y1, 2.3)] {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
    assert!(svg.contains(">bed</text>"));
    assert_eq!(svg, render_floor_plan(&layout, &g).unwrap());
}

#[test]
fn facing_tick_points_the_right_way() {
    let room = Room::new(4.0, 3.0, 2.5);
    let g = SceneGraph::new(room).with_node(ObjectNode::new("sofa_1", "sofa", Size3::new(2.0, 0.8, 0.8)));
    // Rotated a quarter turn clockwise, the sofa faces east.
    let layout = layout_of(room, &[("sofa_1", Vec3::new(2.0, 1.5, 0.4), Rotation::Deg90)]);
    let svg = render_floor_plan(&layout, &g).unwrap();
    let (x0, y0, x1, y1) = bounds(&parse_polygons(&svg, room)[0].1);
    assert!((x1 - x0 - 0.8).abs() < 1e-9 && (y1 - y0 - 2.0).abs() < 1e-9);
    let line = svg.split("<line class=\"facing\" ").nth(1).unwrap();
    let attr = |name: &str| -> f64 {
        let s = line.split(&format!("{name}=\"")).nth(1).unwrap();
        s[..s.find('"').unwrap()].parse().unwrap()
    };
    assert!(attr("x2") > attr("x1"));
    assert_eq!(attr("y1"), attr("y2"));
}

#[test]
fn unsolved_layouts_are_refused() {
    let room = Room::new(4.0, 3.0, 2.5);
    let mut layout = layout_of(room, &[]);
    layout.status = SolveStatus::Unsat;
    let g = SceneGraph::new(room);
    assert!(matches!(render_floor_plan(&layout, &g), Err(ComposeError::UnsolvedLayout)));
    let meta = ManifestMetadata { seed: 0, config_hash: String::new(), generator: "t".into() };
    assert!(matches!(export_manifest(&layout, &[], &g, meta), Err(ComposeError::UnsolvedLayout)));
}

#[test]
fn solved_plans_match_positions_within_a_millimeter() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    for seed in 0..15 {
        let g = correct_graph(&random_graph(&mut rng, &GraphParams::rooms()), None, None).graph;
        let Ok(layout) = solve_layout(&g, &SolverConfig::default().with_seed(seed)) else { continue };
        let svg = render_floor_plan(&layout, &g).unwrap();
        let polys = parse_polygons(&svg, layout.room);
        assert_eq!(polys.len(), layout.placements.len());
        for (id, corners) in polys {
            let p = layout.placements[&id];
            let half = p.rotation.world_half_extents(g.node(&id).unwrap().size);
            let (x0, y0, x1, y1) = bounds(&corners);
            for (got, want) in [
                (x0, p.position.x - half.x),
                (x1, p.position.x + half.x),
                (y0, p.position.y - half.y),
                (y1, p.position.y + half.y),
            ] {
                assert!((got - want).abs() <= 1e-3, "{id}: {got} vs {want}");
            }
        }
        checked += 1;
    }
    assert!(checked >= 5);
}

fn bedroom_graph() -> SceneGraph {
    SceneGraph::new(Room::new(4.0, 3.6, 2.6))
        .with_node(ObjectNode::new("bed_1", "bed", Size3::new(1.6, 2.1, 0.5)).with_style("scandinavian", "light oak"))
        .with_node(ObjectNode::new("desk_1", "desk", Size3::new(1.2, 0.6, 0.75)).with_style("modern", "walnut"))
        .with_node(ObjectNode::new("desk_chair_1", "desk chair", Size3::new(0.5, 0.5, 0.9)).with_rotation(Rotation::Deg180))
        .with_edge(LayoutElement::WallNorth.id(), "bed_1", Preposition::On, Adjacency::Adjacent)
        .with_edge(LayoutElement::Floor.id(), "bed_1", Preposition::On, Adjacency::Adjacent)
        .with_edge(LayoutElement::WallSouth.id(), "desk_1", Preposition::On, Adjacency::Adjacent)
        .with_edge(LayoutElement::Floor.id(), "desk_1", Preposition::On, Adjacency::Adjacent)
        .with_edge("desk_1", "desk_chair_1", Preposition::InFront, Adjacency::Adjacent)
        .with_edge(LayoutElement::Floor.id(), "desk_chair_1", Preposition::On, Adjacency::Adjacent)
}

#[test]
fn manifest_round_trips_and_validates() {
    let g = bedroom_graph();
    let layout = solve_layout(&g, &SolverConfig::default()).unwrap();
    let index = catalog_index();
    let retrievals = retrieve_for_nodes(&g.nodes, Some(&index), &HashingEmbedder::new(CATALOG_DIM));
    let meta = ManifestMetadata { seed: layout.seed, config_hash: "abc".into(), generator: "test".into() };
    let manifest = export_manifest(&layout, &retrievals, &g, meta).unwrap();
    assert_eq!(manifest.entries.len(), 3);
    let desk = manifest.entries.iter().find(|e| e.node_id == "desk_1").unwrap();
    assert_eq!(desk.asset_id, "desk_walnut");
    assert_eq!(desk.bbox, [1.2, 0.6, 0.75]);
    let text = manifest.to_json();
    assert_eq!(SceneManifest::parse(&text).unwrap(), manifest);
    let mut broken: serde_json::Value = serde_json::from_str(&text).unwrap();
    broken["entries"][0]["rotation"] = 45.into();
    assert!(SceneManifest::parse(&broken.to_string()).is_err());
}

struct Env {
    canned: CannedBackend,
    index: AssetIndex,
    embedder: HashingEmbedder,
}

impl Env {
    fn new() -> Self {
        Self {
            canned: CannedBackend::load(&fixtures_dir().join("canned/bedroom")).unwrap(),
            index: catalog_index(),
            embedder: HashingEmbedder::new(CATALOG_DIM),
        }
    }

    fn ctx(&self) -> RunContext<'_> {
        RunContext { backend: &self.canned, prompts: Prompts::default(), index: Some(&self.index), embedder: &self.embedder }
    }
}

fn bedroom_request() -> DesignRequest {
    let text = std::fs::read_to_string(fixtures_dir().join("canned/bedroom/request.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn checksums(dir: &Path) -> BTreeMap<String, String> {
    let (_, index) = read_bundle(dir).unwrap();
    index
        .artifacts
        .into_iter()
        .filter(|a| !VOLATILE.contains(&a.name.as_str()))
        .map(|a| (a.name, a.sha256))
        .collect()
}

const FULL_BUNDLE: [&str; 17] = [
    "config.json",
    "engineered.json",
    "floorplan.svg",
    "graph.json",
    "layout.json",
    "manifest.json",
    "metrics.json",
    "prompt.txt",
    "proposals.json",
    "request.json",
    "retrievals.json",
    "statements.json",
    "timings.json",
    "transcripts/architect.json",
    "transcripts/corrector.json",
    "transcripts/designer.json",
    "views.json",
];

#[test]
fn canned_design_writes_a_complete_bundle() {
    let env = Env::new();
    let bundle = design_bundle(&bedroom_request(), &RunSettings::default(), &env.ctx()).unwrap();
    assert_eq!(bundle.status, BundleStatus::Solved, "{:?}", bundle.failure);
    for name in FULL_BUNDLE.iter().chain(&["transcripts/engineer.json", "transcripts/refiner.json", "violations.json"]) {
        assert!(bundle.get(name).is_some(), "{name} missing");
    }
    let root = tempfile::tempdir().unwrap();
    let v1 = store_new(&bundle, root.path()).unwrap();
    assert_eq!(v1.file_name().unwrap(), "v1");
    let (back, index) = read_bundle(&v1).unwrap();
    assert_eq!(back.artifacts, bundle.artifacts);
    assert_eq!(index.artifacts.len(), bundle.artifacts.len());
    assert!(index.artifacts.iter().any(|a| a.name == "timings.json" && a.volatile));

    let manifest = SceneManifest::parse(back.text("manifest.json").unwrap()).unwrap();
    assert_eq!(manifest.entries.len(), 9);
    let g = parse_graph_document(back.text("graph.json").unwrap()).unwrap();
    assert_eq!(g.nodes.len(), 9);

    // Same inputs, same bytes.
    let again = design_bundle(&bedroom_request(), &RunSettings::default(), &env.ctx()).unwrap();
    for (name, bytes) in &bundle.artifacts {
        if !VOLATILE.contains(&name.as_str()) {
            assert_eq!(Some(bytes.as_slice()), again.get(name), "{name}");
        }
    }
}

#[test]
fn replay_without_overrides_reproduces_every_artifact() {
    let env = Env::new();
    let bundle = design_bundle(&bedroom_request(), &RunSettings::default(), &env.ctx()).unwrap();
    let root = tempfile::tempdir().unwrap();
    let v1 = store_new(&bundle, root.path()).unwrap();
    let original = checksums(&v1);
    for stage in BundleStage::ALL {
        let out = replay_stage(&v1, stage.as_str(), &ReplayOverrides::default(), &env.ctx()).unwrap();
        assert_eq!(checksums(&out), original, "replay from {stage}");
    }
    assert_eq!(checksums(&v1), original);
}

#[test]
fn reseeded_solve_changes_only_downstream_artifacts() {
    let env = Env::new();
    let bundle = design_bundle(&bedroom_request(), &RunSettings::default(), &env.ctx()).unwrap();
    let root = tempfile::tempdir().unwrap();
    let v1 = store_new(&bundle, root.path()).unwrap();
    let before = checksums(&v1);
    let overrides = ReplayOverrides { seed: Some(7), ..Default::default() };
    let v2 = replay_stage(&v1, "solve_layout", &overrides, &env.ctx()).unwrap();
    assert_eq!(v2.file_name().unwrap(), "v2");
    let after = checksums(&v2);
    let upstream: Vec<&str> = BundleStage::ALL
        .iter()
        .filter(|s| **s < BundleStage::SolveLayout)
        .flat_map(|s| s.outputs().iter().copied())
        .chain(["config.json", "prompt.txt", "request.json"])
        .collect();
    for name in &upstream {
        assert_eq!(before[*name], after[*name], "{name} changed");
    }
    assert_ne!(before["layout.json"], after["layout.json"]);
    assert_ne!(before["floorplan.svg"], after["floorplan.svg"]);
    assert_ne!(before["manifest.json"], after["manifest.json"]);
    let (b2, index) = read_bundle(&v2).unwrap();
    assert_eq!(index.replay.as_ref().unwrap().parent, "v1");
    assert!(b2.text("layout.json").unwrap().contains("\"seed\": 7"));
    // The source version is untouched.
    assert_eq!(checksums(&v1), before);
}

#[test]
fn asset_swap_changes_only_that_entry() {
    let env = Env::new();
    let bundle = design_bundle(&bedroom_request(), &RunSettings::default(), &env.ctx()).unwrap();
    let root = tempfile::tempdir().unwrap();
    let v1 = store_new(&bundle, root.path()).unwrap();
    let mut overrides = ReplayOverrides::default();
    overrides.assets.insert("desk_1".into(), "desk_glass".into());
    let v2 = replay_stage(&v1, "retrieve_assets", &overrides, &env.ctx()).unwrap();
    let m1 = SceneManifest::parse(bundle.text("manifest.json").unwrap()).unwrap();
    let (b2, _) = read_bundle(&v2).unwrap();
    let m2 = SceneManifest::parse(b2.text("manifest.json").unwrap()).unwrap();
    for (a, b) in m1.entries.iter().zip(&m2.entries) {
        if a.node_id == "desk_1" {
            assert_eq!(b.asset_id, "desk_glass");
        } else {
            assert_eq!(a, b);
        }
    }
    // The swap survives a later replay.
    let v3 = replay_stage(&v2, "solve_layout", &ReplayOverrides::default(), &env.ctx()).unwrap();
    let (b3, _) = read_bundle(&v3).unwrap();
    assert!(b3.text("manifest.json").unwrap().contains("desk_glass"));
}

#[test]
fn replay_errors() {
    let env = Env::new();
    let root = tempfile::tempdir().unwrap();
    let doc = serde_json::from_str(&roomsmith::scene::serialize_graph(&bedroom_graph())).unwrap();
    let bundle = solve_bundle(&doc, &RunSettings::default(), &env.ctx()).unwrap();
    assert_eq!(bundle.status, BundleStatus::Solved);
    let v1 = store_new(&bundle, root.path()).unwrap();
    let e = replay_stage(&v1, "plumbing", &ReplayOverrides::default(), &env.ctx()).unwrap_err();
    assert!(matches!(e, ComposeError::UnknownStage(_)));
    let e = replay_stage(&v1, "architect", &ReplayOverrides::default(), &env.ctx()).unwrap_err();
    assert!(matches!(e, ComposeError::MissingInput(_)), "{e}");
    let overrides = ReplayOverrides { graph: Some(doc.clone()), ..Default::default() };
    let e = replay_stage(&v1, "designer", &overrides, &env.ctx()).unwrap_err();
    assert!(matches!(e, ComposeError::InvalidOverride(_)));
}

#[test]
fn edited_graph_replay_moves_the_chair() {
    let env = Env::new();
    let root = tempfile::tempdir().unwrap();
    let g = bedroom_graph();
    let doc: serde_json::Value = serde_json::from_str(&roomsmith::scene::serialize_graph(&g)).unwrap();
    let v1 = store_new(&solve_bundle(&doc, &RunSettings::default(), &env.ctx()).unwrap(), root.path()).unwrap();

    let mut edited = g.clone();
    let e = edited.edges.iter_mut().find(|e| e.child == "desk_chair_1" && e.parent == "desk_1").unwrap();
    e.preposition = Preposition::RightOf;
    let edited_doc: serde_json::Value = serde_json::from_str(&roomsmith::scene::serialize_graph(&edited)).unwrap();
    let overrides = ReplayOverrides { graph: Some(edited_doc.clone()), ..Default::default() };
    let v2 = replay_stage(&v1, "solve_layout", &overrides, &env.ctx()).unwrap();
    let (b2, _) = read_bundle(&v2).unwrap();
    let direct = solve_bundle(&edited_doc, &RunSettings::default(), &env.ctx()).unwrap();
    assert_eq!(b2.get("layout.json"), direct.get("layout.json"));
    assert_eq!(b2.get("floorplan.svg"), direct.get("floorplan.svg"));
}

#[test]
fn backend_failure_leaves_a_partial_bundle() {
    let empty = CannedBackend::new();
    let embedder = HashingEmbedder::new(8);
    let ctx = RunContext { backend: &empty, prompts: Prompts::default(), index: None, embedder: &embedder };
    let bundle = design_bundle(&bedroom_request(), &RunSettings::default(), &ctx).unwrap();
    assert_eq!(bundle.status, BundleStatus::Failed);
    assert_eq!(bundle.failure.as_ref().unwrap().stage, BundleStage::Designer);
    assert!(bundle.get("transcripts/designer.json").is_some());
    assert!(bundle.get("graph.json").is_none());
    let root = tempfile::tempdir().unwrap();
    let dir = store_new(&bundle, root.path()).unwrap();
    let (_, index) = read_bundle(&dir).unwrap();
    assert_eq!(index.status, BundleStatus::Failed);
}

#[test]
fn versions_are_never_overwritten() {
    let env = Env::new();
    let doc = serde_json::from_str(&roomsmith::scene::serialize_graph(&bedroom_graph())).unwrap();
    let bundle = solve_bundle(&doc, &RunSettings::default(), &env.ctx()).unwrap();
    let root = tempfile::tempdir().unwrap();
    let v1 = store_new(&bundle, root.path()).unwrap();
    assert!(matches!(
        roomsmith::compose::write_bundle(&bundle, &v1),
        Err(ComposeError::AlreadyExists(_))
    ));
    let v2 = store_new(&bundle, root.path()).unwrap();
    assert_eq!(v2.file_name().unwrap(), "v2");
}
