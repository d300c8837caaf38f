//! The small shipped asset catalog, indexed with the offline embedder.

use std::path::PathBuf;

use roomsmith::retrieval::{index_catalog, AssetIndex, CatalogEntry, HashingEmbedder};

pub const CATALOG_DIM: usize = 64;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn catalog_entries() -> Vec<CatalogEntry> {
    let text = std::fs::read_to_string(fixtures_dir().join("assets/catalog.json")).expect("catalog fixture");
    serde_json::from_str(&text).expect("catalog parses")
}

pub fn catalog_index() -> AssetIndex {
    index_catalog(catalog_entries(), &HashingEmbedder::new(CATALOG_DIM)).expect("catalog indexes")
}
