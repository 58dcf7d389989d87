//! Grammar-point extraction and example-pair generation.
//!
//! Grammar chapters are cut into overlapping sentence windows, tables are
//! walked row by row with surrounding text, and each unit is sent to an
//! LLM that returns zero or more grammar-point descriptions. Deduplicated
//! points then seed the generation of bilingual example pairs.

mod extract;
mod generate;
mod points;
mod sentences;
mod windows;

pub use extract::{extract_grammar_points, ExtractConfig, Unit};
pub use generate::{
    generate_pairs, ExamplePair, GenerateConfig, GenerateOutcome, LengthBand, PairStatus,
};
pub use points::{
    dedupe_points, gp_id_for, jaccard, normalize_description, GrammarPoint, Provenance,
    DEFAULT_DEDUP_THRESHOLD,
};
pub use sentences::{split_sentences, SentenceSplitter};
pub use windows::{chapter_sentences, row_contexts, slide_windows, window_count, RowContext, TextWindow};

use crate::llm::LlmError;
use crate::reply::ask::AskError;
use serde::{Deserialize, Serialize};

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_STRIDE: usize = 3;
pub const DEFAULT_CONTEXT_BUDGET: usize = 400;

/// Source and target language names substituted into prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguagePair {
    pub source: String,
    pub target: String,
}

impl Default for LanguagePair {
    fn default() -> Self {
        LanguagePair {
            source: "English".into(),
            target: "Luxembourgish".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AtelierError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("unit {unit}: reply unparseable after {attempts} attempts: {problem}")]
    UnparseableReply {
        unit: String,
        attempts: u32,
        problem: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Template(#[from] crate::template::TemplateError),
}

impl AtelierError {
    pub(crate) fn from_ask(unit: &str, e: AskError) -> Self {
        match e {
            AskError::Llm(l) => AtelierError::Llm(l),
            AskError::Unparseable { attempts, problem } => AtelierError::UnparseableReply {
                unit: unit.to_string(),
                attempts,
                problem,
            },
        }
    }
}
