//! Every command is a thin wrapper: running the binary gives the same
//! artifacts as calling the library with the same config.

mod common;

use common::{bedroom_request, checksums, graph_doc, hashing, run_bin, stdout_path, Env};

use roomsmith::compose::{design_bundle, read_bundle, replay_stage, solve_bundle, store_new, BundleStatus, ReplayOverrides};
use roomsmith::eval::{compute_metrics, MetricsReport};
use roomsmith::retrieval::{read_index, retrieve};
use roomsmith::scene::{Adjacency, LayoutElement, ObjectNode, Preposition, Room, SceneGraph, Size3};
use roomsmith_cli::commands::{self, SearchHit};
use roomsmith_cli::RunConfig;
use roomsmith_testkit::assets::{catalog_index, fixtures_dir};
use roomsmith_testkit::scenes::study_graph;

#[test]
fn design_matches_the_library() {
    let env = Env::new();
    let request = env.write_json("request.json", &serde_json::to_value(bedroom_request()).unwrap());
    let out = env.run(&["design", "--request", request.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = stdout_path(&out);
    assert!(dir.starts_with(env.out_root()));
    assert_eq!(dir.file_name().unwrap(), "v1");

    let services = env.services();
    let direct = design_bundle(&bedroom_request(), &env.config.settings(), &services.ctx()).unwrap();
    let other = tempfile::tempdir().unwrap();
    let direct_dir = store_new(&direct, other.path()).unwrap();
    assert_eq!(checksums(&dir), checksums(&direct_dir));
    // Same inputs, same design id.
    assert_eq!(dir.parent().unwrap().file_name(), direct_dir.parent().unwrap().file_name());
}

#[test]
fn design_flags_build_the_request() {
    let env = Env::new();
    let r = bedroom_request();
    let room = format!("{},{},{}", r.room.width_x, r.room.depth_y, r.room.height_z);
    let n = r.object_count.to_string();
    let out = env.run(&["design", "--prompt", &r.user_text, "--room", &room, "-n", &n]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (bundle, _) = read_bundle(&stdout_path(&out)).unwrap();
    let stored: roomsmith::agents::DesignRequest = bundle.json("request.json").unwrap();
    assert_eq!(stored, r);
}

#[test]
fn solve_matches_the_library() {
    let env = Env::new();
    let doc = graph_doc(&study_graph());
    let path = env.write_json("study.json", &doc);
    let out = env.run(&["solve", path.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (bundle, _) = read_bundle(&stdout_path(&out)).unwrap();

    let mut config = env.config.clone();
    config.seed = Some(5);
    let direct = solve_bundle(&doc, &config.settings(), &env.services().ctx()).unwrap();
    for name in ["graph.json", "layout.json", "floorplan.svg", "retrievals.json", "manifest.json", "metrics.json"] {
        assert_eq!(bundle.get(name), direct.get(name), "{name}");
    }
    assert!(bundle.text("layout.json").unwrap().contains("\"seed\": 5"));
}

#[test]
fn unsatisfiable_graph_exits_with_2() {
    let env = Env::new();
    let g = SceneGraph::new(Room::new(4.0, 3.0, 2.4))
        .with_node(ObjectNode::new("wardrobe_1", "wardrobe", Size3::new(4.5, 0.6, 2.0)))
        .with_edge(LayoutElement::WallNorth.id(), "wardrobe_1", Preposition::On, Adjacency::Adjacent)
        .with_edge(LayoutElement::Floor.id(), "wardrobe_1", Preposition::On, Adjacency::Adjacent);
    let path = env.write_json("wide.json", &graph_doc(&g));
    let out = env.run(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let (_, index) = read_bundle(&stdout_path(&out)).unwrap();
    assert_eq!(index.status, BundleStatus::Unsat);
}

#[test]
fn replay_matches_the_library() {
    let env = Env::new();
    let path = env.write_json("study.json", &graph_doc(&study_graph()));
    let v1 = stdout_path(&env.run(&["solve", path.to_str().unwrap()]));
    let out = env.run(&["replay", v1.to_str().unwrap(), "--stage", "solve_layout", "--seed", "7", "--asset", "table_1=table_dining_oak"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v2 = stdout_path(&out);
    assert_eq!(v2.file_name().unwrap(), "v2");

    let mut overrides = ReplayOverrides { seed: Some(7), ..Default::default() };
    overrides.assets.insert("table_1".into(), "table_dining_oak".into());
    let direct = replay_stage(&v1, "solve_layout", &overrides, &env.services().ctx()).unwrap();
    assert_eq!(direct.file_name().unwrap(), "v3");
    assert_eq!(checksums(&v2), checksums(&direct));
}

#[test]
fn evaluate_matches_compute_metrics() {
    let env = Env::new();
    let path = env.write_json("study.json", &graph_doc(&study_graph()));
    let v1 = stdout_path(&env.run(&["solve", path.to_str().unwrap()]));
    let v2 = stdout_path(&env.run(&["solve", path.to_str().unwrap(), "--seed", "3"]));
    let missing = env.dir.path().join("nowhere");
    let out = env.run(&["evaluate", v1.to_str().unwrap(), v2.parent().unwrap().to_str().unwrap(), missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: MetricsReport = serde_json::from_slice(&out.stdout).unwrap();

    let docs: Vec<(String, String)> = [v1.join("manifest.json"), v2.join("manifest.json")]
        .iter()
        .map(|p| (p.display().to_string(), std::fs::read_to_string(p).unwrap()))
        .collect();
    let direct = compute_metrics(&docs);
    assert_eq!(report.n_scenes, 2);
    assert_eq!((report.nobj, report.oob_rate, report.bbl), (direct.nobj, direct.oob_rate, direct.bbl));
    assert_eq!(report.nobj, 4.0);
    assert_eq!(report.excluded.len(), 1);
    assert!(report.excluded[0].source.contains("nowhere"));
}

#[test]
fn index_build_and_search_match_the_library() {
    let env = Env::new();
    let out_path = env.dir.path().join("fresh.rsix");
    let catalog = fixtures_dir().join("assets/catalog.json");
    let out = env.run(&["index", "build", "--catalog", catalog.to_str().unwrap(), "-o", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let built = read_index(&out_path).unwrap();
    assert_eq!(built, catalog_index());

    let out = env.run(&["search", "modern walnut desk", "-k", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let hits: Vec<SearchHit> = serde_json::from_slice(&out.stdout).unwrap();
    let query = hashing().embed_one("modern walnut desk");
    let direct = retrieve(&built, &query, 3).unwrap();
    assert_eq!(hits.iter().map(|h| h.asset_id.as_str()).collect::<Vec<_>>(), direct.iter().map(|h| h.asset_id.as_str()).collect::<Vec<_>>());
    assert_eq!(hits[0].asset_id, "desk_walnut");
    assert_eq!(hits, commands::search(&built, &hashing(), "modern walnut desk", 3).unwrap());
}

#[test]
fn shipped_index_and_config_are_current() {
    let shipped = fixtures_dir().join("assets/catalog.rsix");
    let fresh = catalog_index();
    if std::env::var_os("ROOMSMITH_BLESS").is_some() {
        roomsmith::retrieval::write_index(&fresh, &shipped).unwrap();
    }
    assert_eq!(read_index(&shipped).unwrap(), fresh, "rerun with ROOMSMITH_BLESS=1");

    let config = RunConfig::load(&fixtures_dir().join("roomsmith.toml")).unwrap();
    let services = roomsmith_cli::Services::from_config(&config).unwrap();
    assert!(services.has_backend);
    assert_eq!(services.index.unwrap().len(), fresh.len());

    let study = std::fs::read_to_string(fixtures_dir().join("graphs/study.json")).unwrap();
    if std::env::var_os("ROOMSMITH_BLESS").is_some() {
        std::fs::write(fixtures_dir().join("graphs/study.json"), roomsmith::scene::serialize_graph(&study_graph())).unwrap();
    } else {
        assert_eq!(study, roomsmith::scene::serialize_graph(&study_graph()), "rerun with ROOMSMITH_BLESS=1");
    }
}

#[test]
fn exit_codes() {
    // Config error: the fixture directory does not exist.
    let env = Env::with_backend("kind = \"canned\"\nfixtures = \"no/such/dir\"");
    let request = env.write_json("request.json", &serde_json::to_value(bedroom_request()).unwrap());
    let out = env.run(&["design", "--request", request.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));

    // Backend failure: no recorded answers, so the Designer fails. The
    // partial bundle is still written.
    let env = Env::with_backend("kind = \"canned\"\nfixtures = \"empty\"");
    std::fs::create_dir(env.dir.path().join("empty")).unwrap();
    let request = env.write_json("request.json", &serde_json::to_value(bedroom_request()).unwrap());
    let out = env.run(&["design", "--request", request.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let (bundle, index) = read_bundle(&stdout_path(&out)).unwrap();
    assert_eq!(index.status, BundleStatus::Failed);
    assert!(bundle.get("transcripts/designer.json").is_some());

    // Design without any backend section.
    let out = run_bin(&["--config", "/dev/null", "design", "--prompt", "x", "--room", "3,3,2.5", "-n", "2"]);
    assert_eq!(out.status.code(), Some(4));

    // Other errors.
    let env = Env::new();
    assert_eq!(env.run(&["solve", "/no/such/graph.json"]).status.code(), Some(1));
    assert_eq!(env.run(&["replay", "/no/such/v1", "--stage", "compose"]).status.code(), Some(1));
    assert_eq!(run_bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn hashing_dimension_must_match_the_index() {
    let env = Env::new();
    let mut config = env.config.clone();
    config.embedding = roomsmith_cli::config::EmbeddingConfig::Hashing { dim: 8 };
    assert!(matches!(roomsmith_cli::Services::from_config(&config), Err(roomsmith_cli::CliError::Config(_))));
}
