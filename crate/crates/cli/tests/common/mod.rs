#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use roomsmith::agents::DesignRequest;
use roomsmith::compose::{read_bundle, VOLATILE};
use roomsmith::retrieval::{write_index, HashingEmbedder};
use roomsmith::scene::{serialize_graph, SceneGraph};
use roomsmith_cli::{RunConfig, Services};
use roomsmith_testkit::assets::{catalog_index, fixtures_dir, CATALOG_DIM};

/// A scratch directory with an asset index, a config file pointing at the
/// shipped bedroom fixtures and an empty bundle root.
pub struct Env {
    pub dir: TempDir,
    pub config_path: PathBuf,
    pub config: RunConfig,
}

impl Env {
    pub fn new() -> Env {
        let fixtures = fixtures_dir().join("canned/bedroom");
        Env::with_backend(&format!("kind = \"canned\"\nfixtures = \"{}\"", fixtures.display()))
    }

    /// `backend` is the body of the `[backend]` table.
    pub fn with_backend(backend: &str) -> Env {
        let dir = tempfile::tempdir().unwrap();
        let index = dir.path().join("catalog.rsix");
        write_index(&catalog_index(), &index).unwrap();
        let text = format!(
            "out_root = \"designs\"\nindex = \"catalog.rsix\"\n\n[backend]\n{backend}\n\n[embedding]\nkind = \"hashing\"\ndim = {CATALOG_DIM}\n"
        );
        let config_path = dir.path().join("roomsmith.toml");
        std::fs::write(&config_path, text).unwrap();
        let config = RunConfig::load(&config_path).unwrap();
        Env { dir, config_path, config }
    }

    pub fn services(&self) -> Services {
        Services::from_config(&self.config).unwrap()
    }

    pub fn out_root(&self) -> PathBuf {
        self.config.out_root.clone()
    }

    /// Runs the binary with this env's config.
    pub fn run(&self, args: &[&str]) -> Output {
        let mut all = vec!["--config", self.config_path.to_str().unwrap()];
        all.extend_from_slice(args);
        run_bin(&all)
    }

    /// Writes `value` as JSON into the scratch directory.
    pub fn write_json(&self, name: &str, value: &Value) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
        path
    }
}

pub fn run_bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roomsmith"))
        .args(args)
        .env_remove("ROOMSMITH_CONFIG")
        .output()
        .unwrap()
}

pub fn stdout_path(out: &Output) -> PathBuf {
    PathBuf::from(String::from_utf8(out.stdout.clone()).unwrap().trim())
}

pub fn bedroom_request() -> DesignRequest {
    let text = std::fs::read_to_string(fixtures_dir().join("canned/bedroom/request.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn graph_doc(g: &SceneGraph) -> Value {
    serde_json::from_str(&serialize_graph(g)).unwrap()
}

/// Non-volatile artifact checksums of a bundle version.
pub fn checksums(dir: &Path) -> BTreeMap<String, String> {
    let (_, index) = read_bundle(dir).unwrap();
    index
        .artifacts
        .into_iter()
        .filter(|a| !VOLATILE.contains(&a.name.as_str()))
        .map(|a| (a.name, a.sha256))
        .collect()
}

pub fn hashing() -> HashingEmbedder {
    HashingEmbedder::new(CATALOG_DIM)
}
