use super::{LlmError, LlmTranscript};
use std::fs;
use std::path::{Path, PathBuf};

/// Append-only transcript store laid out as `<root>/<hash[0:2]>/<hash>.json`.
#[derive(Debug, Clone)]
pub struct TranscriptCache {
    root: PathBuf,
}

impl TranscriptCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        TranscriptCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, hash: &str) -> PathBuf {
        let shard = hash.get(..2).unwrap_or("xx");
        self.root.join(shard).join(format!("{hash}.json"))
    }

    /// Look up a transcript. A present but unreadable, unparsable, or
    /// mismatching entry is reported as [`LlmError::CacheCorrupt`].
    pub fn get(&self, hash: &str) -> Result<Option<LlmTranscript>, LlmError> {
        let path = self.path_for(hash);
        if !path.exists() {
            return Ok(None);
        }
        let corrupt = |reason: String| LlmError::CacheCorrupt {
            path: path.display().to_string(),
            reason,
        };
        let bytes = fs::read(&path).map_err(|e| corrupt(e.to_string()))?;
        let t: LlmTranscript =
            serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
        if t.request_hash != hash {
            return Err(corrupt(format!("stored hash {} differs from key", t.request_hash)));
        }
        let recomputed = t.request.request_hash();
        if recomputed != hash {
            return Err(corrupt(format!("stored request hashes to {recomputed}")));
        }
        Ok(Some(t))
    }

    /// Persist a transcript unless one already exists under its hash.
    pub fn put(&self, t: &LlmTranscript) -> Result<(), LlmError> {
        let path = self.path_for(&t.request_hash);
        if path.exists() {
            return Ok(());
        }
        let mut bytes = serde_json::to_vec_pretty(t).expect("transcript serializes");
        bytes.push(b'\n');
        crate::jsonl::write_atomic(&path, &bytes).map_err(|e| LlmError::CacheIo(e.to_string()))
    }

    /// Every stored transcript hash, sorted.
    pub fn hashes(&self) -> Result<Vec<String>, LlmError> {
        let mut out = Vec::new();
        if !self.root.exists() {
            return Ok(out);
        }
        let shards = fs::read_dir(&self.root).map_err(|e| LlmError::CacheIo(e.to_string()))?;
        for shard in shards {
            let shard = shard.map_err(|e| LlmError::CacheIo(e.to_string()))?.path();
            if !shard.is_dir() {
                continue;
            }
            for entry in fs::read_dir(&shard).map_err(|e| LlmError::CacheIo(e.to_string()))? {
                let p = entry.map_err(|e| LlmError::CacheIo(e.to_string()))?.path();
                if p.extension().is_some_and(|x| x == "json") {
                    if let Some(stem) = p.file_stem() {
                        out.push(stem.to_string_lossy().into_owned());
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ChatMessage, LlmRequest, Purpose, Usage};

    fn transcript(text: &str) -> LlmTranscript {
        let request = LlmRequest::new("p", "m", Purpose::Task, vec![ChatMessage::user(text)]);
        LlmTranscript {
            request_hash: request.request_hash(),
            request,
            response_text: "ANSWER: A".into(),
            usage: Usage::default(),
            latency_ms: 3,
            timestamp: 0,
        }
    }

    #[test]
    fn put_get_roundtrip_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TranscriptCache::new(dir.path());
        let t = transcript("q");
        cache.put(&t).unwrap();
        let p = cache.path_for(&t.request_hash);
        assert!(p.starts_with(dir.path().join(&t.request_hash[..2])));
        assert_eq!(cache.get(&t.request_hash).unwrap(), Some(t.clone()));
        assert_eq!(cache.hashes().unwrap(), vec![t.request_hash.clone()]);
        assert_eq!(cache.get("ffff").unwrap(), None);
    }

    #[test]
    fn append_only() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TranscriptCache::new(dir.path());
        let t = transcript("q");
        cache.put(&t).unwrap();
        let mut other = t.clone();
        other.response_text = "ANSWER: B".into();
        cache.put(&other).unwrap();
        assert_eq!(cache.get(&t.request_hash).unwrap().unwrap().response_text, "ANSWER: A");
    }

    #[test]
    fn tampered_entry_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TranscriptCache::new(dir.path());
        let t = transcript("q");
        cache.put(&t).unwrap();
        let p = cache.path_for(&t.request_hash);
        let text = fs::read_to_string(&p).unwrap().replace("\"q\"", "\"tampered\"");
        fs::write(&p, text).unwrap();
        assert!(matches!(cache.get(&t.request_hash), Err(LlmError::CacheCorrupt { .. })));
        fs::write(&p, "{not json").unwrap();
        assert!(matches!(cache.get(&t.request_hash), Err(LlmError::CacheCorrupt { .. })));
    }
}
