//! The benchmark dataset: grammar points, example pairs, back-check
//! verdicts and minimal pairs, plus accounting and external corpora.

mod manifest;
mod validate;

pub use manifest::{DatasetManifest, DatasetSource, SourceTag};
pub use validate::{validate, ValidationReport, PAIRS_PER_POINT_BAND};

use crate::atelier::{ExamplePair, GrammarPoint, PairStatus};
use crate::forge::{BackcheckVerdict, MinimalPair};
use crate::jsonl::{read_jsonl_or_empty, JsonlError};
use std::collections::HashMap;
use std::path::Path;

pub const POINTS_FILE: &str = "grammar_points.jsonl";
pub const PAIRS_FILE: &str = "pairs.jsonl";
pub const VERDICTS_FILE: &str = "verdicts.jsonl";
pub const MINIMAL_PAIRS_FILE: &str = "minimal_pairs.jsonl";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub points: Vec<GrammarPoint>,
    pub pairs: Vec<ExamplePair>,
    pub verdicts: Vec<BackcheckVerdict>,
    pub minimal_pairs: Vec<MinimalPair>,
}

impl Dataset {
    /// Read the dataset files of a run directory; absent files are empty.
    pub fn load(dir: &Path) -> Result<Self, JsonlError> {
        Ok(Dataset {
            points: read_jsonl_or_empty(&dir.join(POINTS_FILE))?,
            pairs: read_jsonl_or_empty(&dir.join(PAIRS_FILE))?,
            verdicts: read_jsonl_or_empty(&dir.join(VERDICTS_FILE))?,
            minimal_pairs: read_jsonl_or_empty(&dir.join(MINIMAL_PAIRS_FILE))?,
        })
    }

    pub fn verified_pairs(&self) -> impl Iterator<Item = &ExamplePair> {
        self.pairs.iter().filter(|p| p.status == PairStatus::Verified)
    }

    pub fn point_index(&self) -> HashMap<&str, &GrammarPoint> {
        self.points.iter().map(|g| (g.gp_id.as_str(), g)).collect()
    }
}
