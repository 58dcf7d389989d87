use crate::atelier::PairStatus;
use crate::jsonl::{read_jsonl, JsonlError};
use crate::metrics::{segments_from_pairs, Direction, Segment};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceTag {
    /// A run directory produced from a grammar book; its verified pairs
    /// become segments.
    GrammarBook,
    /// A parallel corpus: JSONL of `{segment_id, english, luxembourgish}`.
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSource {
    pub name: String,
    pub tag: SourceTag,
    pub path: PathBuf,
}

/// A named list of tagged sources; a composite set lists several.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    #[serde(rename = "source")]
    pub sources: Vec<DatasetSource>,
}

#[derive(Deserialize)]
struct ParallelLine {
    segment_id: String,
    english: String,
    luxembourgish: String,
}

impl DatasetManifest {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Translation segments from every source, ids prefixed `<source>:`.
    /// Relative paths resolve against `base`.
    pub fn segments(&self, base: &Path, direction: Direction) -> Result<Vec<Segment>, JsonlError> {
        let mut out = Vec::new();
        for src in &self.sources {
            let path = if src.path.is_absolute() { src.path.clone() } else { base.join(&src.path) };
            let segs = match src.tag {
                SourceTag::GrammarBook => {
                    let ds = super::Dataset::load(&path)?;
                    let verified: Vec<_> = ds
                        .pairs
                        .into_iter()
                        .filter(|p| p.status == PairStatus::Verified)
                        .collect();
                    segments_from_pairs(&verified, direction)
                }
                SourceTag::Parallel => read_jsonl::<ParallelLine>(&path)?
                    .into_iter()
                    .map(|l| {
                        let (source, reference) = match direction {
                            Direction::EnLb => (l.english, l.luxembourgish),
                            Direction::LbEn => (l.luxembourgish, l.english),
                        };
                        Segment { segment_id: l.segment_id, source, reference }
                    })
                    .collect(),
            };
            out.extend(segs.into_iter().map(|mut s| {
                s.segment_id = format!("{}:{}", src.name, s.segment_id);
                s
            }));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_manifest() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("news.jsonl"),
            "{\"segment_id\":\"n1\",\"english\":\"Hello.\",\"luxembourgish\":\"Moien.\"}\n",
        )
        .unwrap();
        let m = DatasetManifest::from_toml(
            "name = \"mixed\"\n[[source]]\nname = \"news\"\ntag = \"parallel\"\npath = \"news.jsonl\"\n[[source]]\nname = \"book\"\ntag = \"grammar-book\"\npath = \"run\"\n",
        )
        .unwrap();
        assert_eq!(m.sources[1].tag, SourceTag::GrammarBook);
        let segs = m.segments(dir.path(), Direction::LbEn).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].segment_id, "news:n1");
        assert_eq!(segs[0].source, "Moien.");
    }
}
