//! Text-embedding retrieval of 3D assets.
//!
//! Each object node is described as "{style_material} {name}", embedded and
//! matched against an [`AssetIndex`] by exact cosine similarity. The chosen
//! asset is then stretched per axis to the node's bounding box.

mod embed;
mod file;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scene::{ObjectNode, Size3};

pub use embed::{embed_description, Embedder, HashingEmbedder, TableEmbedder};
pub use file::{read_index, write_index, INDEX_MAGIC, INDEX_VERSION, MAX_ID_BYTES};

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("no asset records")]
    Empty,
    #[error("dimension mismatch{}: expected {expected}, got {got}", id.as_ref().map(|i| format!(" for {i}")).unwrap_or_default())]
    DimensionMismatch {
        id: Option<String>,
        expected: usize,
        got: usize,
    },
    #[error("duplicate asset id {0}")]
    DuplicateId(String),
    #[error("invalid asset {id}: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("query vector has zero length")]
    ZeroQuery,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("embedder unavailable: {0}")]
    EmbedderUnavailable(String),
    #[error("no embedding for \"{0}\"")]
    UnknownDescription(String),
    #[error("bad index file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetRecord {
    pub id: String,
    pub name: String,
    pub uri: String,
    /// Native bounding box in meters (x, y, z).
    pub dims: Size3,
    pub embedding: Vec<f32>,
}

/// An immutable, id-ordered set of unit-norm asset embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct AssetIndex {
    dim: usize,
    records: Vec<AssetRecord>,
    checksum: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub asset_id: String,
    pub similarity: f64,
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

fn normalized(v: &[f32]) -> Option<Vec<f32>> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    // Already unit length: keep the stored bits so reloading is exact.
    if (n - 1.0).abs() <= 1e-7 {
        return Some(v.to_vec());
    }
    Some(v.iter().map(|&x| (f64::from(x) / n) as f32).collect())
}

/// Sorts records by id, checks them, and normalizes every embedding.
pub fn build_index(records: Vec<AssetRecord>) -> Result<AssetIndex, RetrievalError> {
    let dim = records.first().ok_or(RetrievalError::Empty)?.embedding.len();
    if dim == 0 {
        return Err(RetrievalError::DimensionMismatch {
            id: Some(records[0].id.clone()),
            expected: 1,
            got: 0,
        });
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(records.len());
    for mut r in records {
        if r.embedding.len() != dim {
            return Err(RetrievalError::DimensionMismatch {
                id: Some(r.id),
                expected: dim,
                got: r.embedding.len(),
            });
        }
        if !seen.insert(r.id.clone()) {
            return Err(RetrievalError::DuplicateId(r.id));
        }
        let invalid = |reason: &str| RetrievalError::InvalidRecord {
            id: r.id.clone(),
            reason: reason.into(),
        };
        if r.id.is_empty() || r.id.len() > MAX_ID_BYTES || r.id.contains('\0') {
            return Err(invalid("id must be 1 to 64 bytes without NUL"));
        }
        if !r.dims.is_positive() {
            return Err(invalid("native dimensions must be positive"));
        }
        r.embedding = normalized(&r.embedding).ok_or_else(|| invalid("embedding has zero length"))?;
        out.push(r);
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    let checksum = records_checksum(dim, &out);
    Ok(AssetIndex {
        dim,
        records: out,
        checksum,
    })
}

/// sha256 over the binary record section, as hex.
fn records_checksum(dim: usize, records: &[AssetRecord]) -> String {
    let mut h = Sha256::new();
    h.update((dim as u32).to_le_bytes());
    for r in records {
        h.update(file::encode_record(r));
    }
    hex(&h.finalize())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl AssetIndex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[AssetRecord] {
        &self.records
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn get(&self, id: &str) -> Option<&AssetRecord> {
        self.records
            .binary_search_by(|r| r.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.records[i])
    }
}

/// Exact top-k by cosine similarity, highest first, ties by ascending id.
pub fn retrieve(index: &AssetIndex, query: &[f32], k: usize) -> Result<Vec<Hit>, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidK);
    }
    if query.len() != index.dim {
        return Err(RetrievalError::DimensionMismatch {
            id: None,
            expected: index.dim,
            got: query.len(),
        });
    }
    let qn = norm(query);
    if qn == 0.0 || !qn.is_finite() {
        return Err(RetrievalError::ZeroQuery);
    }
    let mut hits: Vec<(f64, usize)> = index
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let dot: f64 = r
                .embedding
                .iter()
                .zip(query)
                .map(|(&a, &b)| f64::from(a) * f64::from(b))
                .sum();
            (dot / qn, i)
        })
        .collect();
    // Records are id-sorted, so the index breaks ties by id.
    hits.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    hits.truncate(k);
    Ok(hits
        .into_iter()
        .map(|(s, i)| Hit {
            asset_id: index.records[i].id.clone(),
            similarity: s,
        })
        .collect())
}

/// A catalog row: an asset with either a stored embedding or a description
/// to embed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: String,
    pub name: String,
    pub uri: String,
    pub dims: Size3,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub embedding: Option<Vec<f32>>,
}

/// Builds an index from catalog rows, embedding descriptions (or names)
/// where no vector is given.
pub fn index_catalog(entries: Vec<CatalogEntry>, embedder: &dyn Embedder) -> Result<AssetIndex, RetrievalError> {
    let texts: Vec<String> = entries
        .iter()
        .filter(|e| e.embedding.is_none())
        .map(|e| e.description.clone().unwrap_or_else(|| e.name.clone()))
        .collect();
    let mut vectors = embedder.embed(&texts)?.into_iter();
    let records = entries
        .into_iter()
        .map(|e| {
            let embedding = match e.embedding {
                Some(v) => v,
                None => vectors
                    .next()
                    .ok_or_else(|| RetrievalError::EmbedderUnavailable("fewer vectors than texts".into()))?,
            };
            Ok(AssetRecord {
                id: e.id,
                name: e.name,
                uri: e.uri,
                dims: e.dims,
                embedding,
            })
        })
        .collect::<Result<Vec<_>, RetrievalError>>()?;
    build_index(records)
}

/// Description used to embed a node.
pub fn describe(node: &ObjectNode) -> String {
    let sm = node.style_material();
    if sm.is_empty() {
        node.name.trim().to_string()
    } else {
        format!("{sm} {}", node.name.trim())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetFit {
    /// Per-axis factors target / native.
    pub scale: [f64; 3],
    /// Largest scale factor over the smallest; 1.0 for uniform scaling.
    pub anisotropy: f64,
}

pub fn fit_asset(native: Size3, target: Size3) -> AssetFit {
    let scale = [target.x / native.x, target.y / native.y, target.z / native.z];
    let max = scale.iter().cloned().fold(f64::MIN, f64::max);
    let min = scale.iter().cloned().fold(f64::MAX, f64::min);
    AssetFit {
        scale,
        anisotropy: max / min,
    }
}

/// The asset chosen for one node, or a placeholder when none could be.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Retrieval {
    pub node_id: String,
    pub description: String,
    pub asset_id: String,
    pub similarity: Option<f64>,
    pub fit: AssetFit,
    /// Set when no asset was retrieved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<String>,
}

/// Id used for nodes without a retrieved asset.
pub fn placeholder_id(node_id: &str) -> String {
    format!("placeholder:{node_id}")
}

/// Top-1 asset per object node. Embedding failures fall back to a unit-scale
/// placeholder so the scene can still be exported.
pub fn retrieve_for_nodes(
    nodes: &[ObjectNode],
    index: Option<&AssetIndex>,
    embedder: &dyn Embedder,
) -> Vec<Retrieval> {
    nodes
        .iter()
        .map(|node| {
            let description = describe(node);
            let found = index
                .ok_or_else(|| "no asset index configured".to_string())
                .and_then(|index| {
                    let q = embed_description(node, embedder).map_err(|e| e.to_string())?;
                    let hit = retrieve(index, &q, 1).map_err(|e| e.to_string())?.remove(0);
                    let rec = index.get(&hit.asset_id).expect("hit comes from the index");
                    Ok((hit, rec.dims))
                });
            match found {
                Ok((hit, dims)) => Retrieval {
                    node_id: node.id.clone(),
                    description,
                    asset_id: hit.asset_id,
                    similarity: Some(hit.similarity),
                    fit: fit_asset(dims, node.size),
                    fallback_reason: None,
                },
                Err(reason) => Retrieval {
                    node_id: node.id.clone(),
                    description,
                    asset_id: placeholder_id(&node.id),
                    similarity: None,
                    fit: fit_asset(node.size, node.size),
                    fallback_reason: Some(reason),
                },
            }
        })
        .collect()
}
