//! Translation-quality metrics, translation elicitation and judge scoring.

mod bleu;
mod chrf;
mod corpus;
mod judge;
mod subword;
mod translate;

pub use bleu::{bleu, brevity_penalty, BleuParams, Smoothing};
pub use chrf::{chrf_pp, word_tokens, ChrfParams};
pub use corpus::{
    bridge_records, read_external_scores, score_corpus, Aggregate, BleuTokenizer, BridgeRecord,
    CorpusScores, ExternalScore,
    ScoreRequest, ScoreRow,
};
pub use judge::{judge_corpus, judge_translation, parse_judge_score, JudgeConfig, JudgeScore};
pub use subword::{detokenize, SubwordToken, SubwordVocab, BOUNDARY, UNK};
pub use translate::{
    segments_from_pairs, translate_corpus, Direction, Hypothesis, Segment, TranslateConfig,
    TranslateFailure,
};

use crate::llm::LlmError;
use crate::template::TemplateError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("subword vocabulary unusable ({path}): {reason}")]
    VocabMissing { path: String, reason: String },
    #[error("segments misaligned: {0}")]
    AlignmentMismatch(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("segment {segment_id}: reply unparseable after {attempts} attempts: {problem}")]
    UnparseableReply {
        segment_id: String,
        attempts: u32,
        problem: String,
    },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Chrfpp,
    Bleu,
    Judge,
    External,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Chrfpp,
        MetricKind::Bleu,
        MetricKind::Judge,
        MetricKind::External,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Chrfpp => "chrfpp",
            MetricKind::Bleu => "bleu",
            MetricKind::Judge => "judge",
            MetricKind::External => "external",
        }
    }

    /// Upper end of the value range; all scales start at 0.
    pub fn scale_max(self) -> f64 {
        match self {
            MetricKind::Chrfpp | MetricKind::Bleu => 100.0,
            MetricKind::Judge => 10.0,
            MetricKind::External => 1.0,
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| format!("unknown metric `{s}` (expected chrfpp, bleu, judge, external)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore<T> {
    pub metric: MetricKind,
    pub value: T,
    pub segment_id: String,
}

impl<T: crate::num::Scalar> MetricScore<T> {
    pub fn in_scale(&self) -> bool {
        let max = T::from_f64_lossy(self.metric.scale_max());
        self.value >= T::zero() && self.value <= max
    }
}
