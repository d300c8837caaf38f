//! On-disk index: a little-endian binary file of fixed-width records plus a
//! `.tsv` sidecar with names, URIs and the checksum.
//!
//! ```text
//! header   magic "RSIX" | version u32 | dim u32 | count u64
//! record   id [u8; 64] (NUL padded) | dims 3 x f64 | embedding dim x f32
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use super::{build_index, records_checksum, AssetIndex, AssetRecord, RetrievalError};
use crate::scene::Size3;

pub const INDEX_MAGIC: [u8; 4] = *b"RSIX";
pub const INDEX_VERSION: u32 = 1;
pub const MAX_ID_BYTES: usize = 64;
const HEADER_BYTES: usize = 4 + 4 + 4 + 8;

pub(super) fn encode_record(r: &AssetRecord) -> Vec<u8> {
    let mut out = Vec::with_capacity(MAX_ID_BYTES + 24 + 4 * r.embedding.len());
    let mut id = [0u8; MAX_ID_BYTES];
    id[..r.id.len()].copy_from_slice(r.id.as_bytes());
    out.extend_from_slice(&id);
    for d in [r.dims.x, r.dims.y, r.dims.z] {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for x in &r.embedding {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".tsv");
    PathBuf::from(s)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RetrievalError + '_ {
    move |source| RetrievalError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `path` and `path.tsv`.
pub fn write_index(index: &AssetIndex, path: &Path) -> Result<(), RetrievalError> {
    let mut bin = Vec::with_capacity(HEADER_BYTES + index.len() * (MAX_ID_BYTES + 24 + 4 * index.dim()));
    bin.extend_from_slice(&INDEX_MAGIC);
    bin.extend_from_slice(&INDEX_VERSION.to_le_bytes());
    bin.extend_from_slice(&(index.dim() as u32).to_le_bytes());
    bin.extend_from_slice(&(index.len() as u64).to_le_bytes());
    for r in index.records() {
        bin.extend_from_slice(&encode_record(r));
    }
    fs::write(path, bin).map_err(io_err(path))?;

    let mut tsv = format!(
        "# version\t{INDEX_VERSION}\n# dim\t{}\n# count\t{}\n# checksum\tsha256:{}\nid\tname\turi\n",
        index.dim(),
        index.len(),
        index.checksum()
    );
    for r in index.records() {
        tsv.push_str(&format!("{}\t{}\t{}\n", escape(&r.id), escape(&r.name), escape(&r.uri)));
    }
    let side = sidecar_path(path);
    fs::write(&side, tsv).map_err(io_err(&side))
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RetrievalError> {
        let end = self.at + n;
        let s = self
            .bytes
            .get(self.at..end)
            .ok_or_else(|| RetrievalError::Format(format!("truncated at byte {}", self.at)))?;
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, RetrievalError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, RetrievalError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, RetrievalError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32(&mut self) -> Result<f32, RetrievalError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

/// Reads an index written by [`write_index`], verifying the checksum.
pub fn read_index(path: &Path) -> Result<AssetIndex, RetrievalError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let mut rd = Reader { bytes: &bytes, at: 0 };
    if rd.take(4)? != INDEX_MAGIC {
        return Err(RetrievalError::Format("bad magic".into()));
    }
    let version = rd.u32()?;
    if version != INDEX_VERSION {
        return Err(RetrievalError::Format(format!("unsupported version {version}")));
    }
    let dim = rd.u32()? as usize;
    let count = rd.u64()? as usize;

    let side = sidecar_path(path);
    let tsv = fs::read_to_string(&side).map_err(io_err(&side))?;
    let mut checksum = None;
    let mut rows = Vec::new();
    for line in tsv.lines() {
        if let Some(meta) = line.strip_prefix("# ") {
            if let Some(v) = meta.strip_prefix("checksum\tsha256:") {
                checksum = Some(v.to_string());
            }
        } else if line != "id\tname\turi" && !line.is_empty() {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(RetrievalError::Format(format!("sidecar row has {} columns", cols.len())));
            }
            rows.push((unescape(cols[0]), unescape(cols[1]), unescape(cols[2])));
        }
    }
    if rows.len() != count {
        return Err(RetrievalError::Format(format!(
            "binary has {count} records, sidecar has {}",
            rows.len()
        )));
    }

    let mut records = Vec::with_capacity(count);
    for (id, name, uri) in rows {
        let raw = rd.take(MAX_ID_BYTES)?;
        let len = raw.iter().position(|&b| b == 0).unwrap_or(MAX_ID_BYTES);
        let bin_id = std::str::from_utf8(&raw[..len]).map_err(|e| RetrievalError::Format(e.to_string()))?;
        if bin_id != id {
            return Err(RetrievalError::Format(format!("record {bin_id} does not match sidecar row {id}")));
        }
        let dims = Size3::new(rd.f64()?, rd.f64()?, rd.f64()?);
        let embedding = (0..dim).map(|_| rd.f32()).collect::<Result<Vec<_>, _>>()?;
        records.push(AssetRecord {
            id,
            name,
            uri,
            dims,
            embedding,
        });
    }
    if rd.at != bytes.len() {
        return Err(RetrievalError::Format("trailing bytes".into()));
    }
    let expected = checksum.ok_or_else(|| RetrievalError::Format("sidecar has no checksum".into()))?;
    if records_checksum(dim, &records) != expected {
        return Err(RetrievalError::Format("checksum mismatch".into()));
    }
    build_index(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escaping_round_trips() {
        for s in ["plain", "tab\there", "line\nbreak", "back\\slash\\t"] {
            assert_eq!(unescape(&escape(s)), s);
        }
    }
}
