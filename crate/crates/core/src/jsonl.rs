//! JSON Lines persistence with keyed upserts.
//!
//! Every stage writes one record per entity. Records carry a stable id, and
//! rewriting a file after a resumed run keeps exactly one line per id in the
//! order the caller supplies, so interrupted runs never duplicate records.

use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl JsonlError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        JsonlError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Read every non-blank line of `path` as a `T`.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let file = File::open(path).map_err(|e| JsonlError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| JsonlError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(&line);
        let rec = serde_path_to_error::deserialize(de).map_err(|e| JsonlError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Like [`read_jsonl`] but a missing file yields an empty list.
pub fn read_jsonl_or_empty<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    if path.exists() {
        read_jsonl(path)
    } else {
        Ok(Vec::new())
    }
}

/// Atomically replace `path` with one JSON line per record.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), JsonlError> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("records serialize");
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

/// Append a single record, creating the file if needed.
pub fn append_jsonl<T: Serialize>(path: &Path, record: &T) -> Result<(), JsonlError> {
    ensure_parent(path)?;
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| JsonlError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut line = serde_json::to_vec(record).expect("record serializes");
    line.push(b'\n');
    w.write_all(&line).map_err(|e| JsonlError::io(path, e))?;
    w.flush().map_err(|e| JsonlError::io(path, e))
}

/// Write bytes to a sibling temp file and rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), JsonlError> {
    ensure_parent(path)?;
    let tmp = tmp_sibling(path);
    fs::write(&tmp, bytes).map_err(|e| JsonlError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| JsonlError::io(path, e))
}

fn tmp_sibling(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let unique = format!(
        ".{name}.{}.{:?}.tmp",
        std::process::id(),
        std::thread::current().id()
    )
    .replace(['(', ')'], "");
    path.with_file_name(unique)
}

pub(crate) fn ensure_parent(path: &Path) -> Result<(), JsonlError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| JsonlError::io(dir, e))?;
        }
    }
    Ok(())
}

/// Merge `existing` and `fresh` records by key: fresh records replace
/// existing ones with the same key, and the output follows `order`
/// (keys absent from `order` are appended in first-seen order).
pub fn upsert_by_key<T, K, F>(existing: Vec<T>, fresh: Vec<T>, key: F, order: &[K]) -> Vec<T>
where
    K: Ord + Clone,
    F: Fn(&T) -> K,
{
    use std::collections::BTreeMap;
    let mut map: BTreeMap<K, T> = BTreeMap::new();
    let mut seen: Vec<K> = Vec::new();
    for r in existing.into_iter().chain(fresh) {
        let k = key(&r);
        if !map.contains_key(&k) {
            seen.push(k.clone());
        }
        map.insert(k, r);
    }
    let mut out = Vec::with_capacity(map.len());
    for k in order {
        if let Some(r) = map.remove(k) {
            out.push(r);
        }
    }
    for k in seen {
        if let Some(r) = map.remove(&k) {
            out.push(r);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    struct Rec {
        id: String,
        v: u32,
    }

    #[test]
    fn write_read_and_append() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.jsonl");
        let recs = vec![
            Rec { id: "x".into(), v: 1 },
            Rec { id: "y".into(), v: 2 },
        ];
        write_jsonl(&p, &recs).unwrap();
        append_jsonl(&p, &Rec { id: "z".into(), v: 3 }).unwrap();
        let back: Vec<Rec> = read_jsonl(&p).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[2].v, 3);
    }

    #[test]
    fn parse_error_reports_line_and_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.jsonl");
        fs::write(&p, "{\"id\":\"a\",\"v\":1}\n{\"id\":\"b\",\"v\":\"no\"}\n").unwrap();
        let err = read_jsonl::<Rec>(&p).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
        assert!(err.contains("v"), "{err}");
    }

    #[test]
    fn upsert_never_duplicates() {
        let a = vec![Rec { id: "x".into(), v: 1 }, Rec { id: "y".into(), v: 1 }];
        let b = vec![Rec { id: "y".into(), v: 2 }, Rec { id: "z".into(), v: 2 }];
        let order = vec!["z".to_string(), "x".to_string(), "y".to_string()];
        let merged = upsert_by_key(a, b, |r| r.id.clone(), &order);
        let ids: Vec<_> = merged.iter().map(|r| (r.id.as_str(), r.v)).collect();
        assert_eq!(ids, vec![("z", 2), ("x", 1), ("y", 2)]);
    }
}
