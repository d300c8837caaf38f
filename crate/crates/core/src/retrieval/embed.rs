use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{describe, normalized, RetrievalError};
use crate::scene::ObjectNode;

/// Turns descriptions into vectors. Remote endpoints implement this outside
/// the core crate.
pub trait Embedder: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, RetrievalError>;
}

impl<E: Embedder + ?Sized> Embedder for &E {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, RetrievalError> {
        (**self).embed(texts)
    }
}

impl<E: Embedder + ?Sized> Embedder for Box<E> {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, RetrievalError> {
        (**self).embed(texts)
    }
}

impl<E: Embedder + ?Sized> Embedder for std::sync::Arc<E> {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, RetrievalError> {
        (**self).embed(texts)
    }
}

/// Unit-norm embedding of a node's description.
pub fn embed_description(node: &ObjectNode, embedder: &dyn Embedder) -> Result<Vec<f32>, RetrievalError> {
    let text = describe(node);
    let mut out = embedder.embed(std::slice::from_ref(&text))?;
    if out.len() != 1 {
        return Err(RetrievalError::EmbedderUnavailable(format!(
            "expected 1 vector, got {}",
            out.len()
        )));
    }
    normalized(&out.remove(0)).ok_or(RetrievalError::UnknownDescription(text))
}

/// Precomputed vectors keyed by exact description text.
#[derive(Clone, Debug, Default)]
pub struct TableEmbedder {
    table: BTreeMap<String, Vec<f32>>,
}

impl TableEmbedder {
    pub fn new(table: BTreeMap<String, Vec<f32>>) -> Self {
        Self { table }
    }

    /// Reads a JSON object mapping description to vector.
    pub fn from_json_file(path: &Path) -> Result<Self, RetrievalError> {
        let text = std::fs::read_to_string(path).map_err(|source| RetrievalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let table = serde_json::from_str(&text).map_err(|e| RetrievalError::Format(format!("{}: {e}", path.display())))?;
        Ok(Self { table })
    }
}

impl Embedder for TableEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, RetrievalError> {
        texts
            .iter()
            .map(|t| {
                self.table
                    .get(t)
                    .cloned()
                    .ok_or_else(|| RetrievalError::UnknownDescription(t.clone()))
            })
            .collect()
    }
}

/// Offline bag-of-words embedder: every lowercase word is hashed to a signed
/// bucket. Texts that share words get positive similarity, which is enough
/// for local catalogs and tests.
#[derive(Clone, Copy, Debug)]
pub struct HashingEmbedder {
    dim: usize,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embed_one(&self, text: &str) -> Vec<f32> {
        let mut v = vec![0f32; self.dim];
        for word in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
        {
            let digest = Sha256::digest(word.to_lowercase().as_bytes());
            let bucket = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
            let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
            v[(bucket % self.dim as u64) as usize] += sign;
        }
        v
    }
}

impl Embedder for HashingEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, RetrievalError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Size3;

    #[test]
    fn hashing_is_case_insensitive_and_stable() {
        let e = HashingEmbedder::new(64);
        assert_eq!(e.embed_one("Walnut Desk"), e.embed_one("walnut, desk"));
        assert_ne!(e.embed_one("walnut desk"), e.embed_one("linen sofa"));
        assert!(e.embed_one("").iter().all(|&x| x == 0.0));
    }

    #[test]
    fn table_misses_are_reported() {
        let mut t = BTreeMap::new();
        t.insert("modern oak desk".to_string(), vec![3.0, 4.0]);
        let e = TableEmbedder::new(t);
        let n = ObjectNode::new("desk_1", "desk", Size3::new(1.0, 1.0, 1.0)).with_style("modern", "oak");
        assert_eq!(embed_description(&n, &e).unwrap(), vec![0.6, 0.8]);
        let other = ObjectNode::new("bed_1", "bed", Size3::new(1.0, 1.0, 1.0));
        assert!(matches!(embed_description(&other, &e), Err(RetrievalError::UnknownDescription(d)) if d == "bed"));
    }
}
