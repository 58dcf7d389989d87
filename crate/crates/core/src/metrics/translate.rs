use super::MetricError;
use crate::atelier::{ExamplePair, LanguagePair};
use crate::hashing::collapse_whitespace;
use crate::llm::{ChatMessage, LlmClient, LlmRequest, Purpose};
use crate::parallel::bounded_map;
use crate::template::{vars, PromptSet};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Direction {
    #[default]
    #[serde(rename = "en-lb")]
    EnLb,
    #[serde(rename = "lb-en")]
    LbEn,
}

impl Direction {
    pub fn languages(self) -> LanguagePair {
        let en = LanguagePair::default();
        match self {
            Direction::EnLb => en,
            Direction::LbEn => LanguagePair {
                source: en.target,
                target: en.source,
            },
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Direction::EnLb => "en-lb",
            Direction::LbEn => "lb-en",
        }
    }
}

impl FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "en-lb" | "en2lb" => Ok(Direction::EnLb),
            "lb-en" | "lb2en" => Ok(Direction::LbEn),
            _ => Err(format!("unknown direction `{s}` (expected en-lb or lb-en)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub segment_id: String,
    pub source: String,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub segment_id: String,
    pub hypothesis: String,
}

/// One segment per pair, keyed by pair id.
pub fn segments_from_pairs(pairs: &[ExamplePair], direction: Direction) -> Vec<Segment> {
    pairs
        .iter()
        .map(|p| {
            let (source, reference) = match direction {
                Direction::EnLb => (&p.english, &p.luxembourgish),
                Direction::LbEn => (&p.luxembourgish, &p.english),
            };
            Segment {
                segment_id: p.pair_id.clone(),
                source: source.clone(),
                reference: reference.clone(),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TranslateConfig {
    pub model: String,
    pub direction: Direction,
}

/// Error carrying the hypotheses that did complete.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{error} ({} segments completed)", completed.len())]
pub struct TranslateFailure {
    pub completed: Vec<Hypothesis>,
    pub error: MetricError,
}

fn clean_translation(reply: &str) -> String {
    let mut text = reply.trim();
    if let Some(inner) = text.strip_prefix("```") {
        let inner = inner.split_once('\n').map_or("", |(_, rest)| rest);
        text = inner.trim_end().strip_suffix("```").unwrap_or(inner).trim();
    }
    for label in ["Translation:", "translation:"] {
        if let Some(rest) = text.strip_prefix(label) {
            text = rest.trim();
        }
    }
    let text = text
        .strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .unwrap_or(text);
    collapse_whitespace(text)
}

/// Translate every segment. On failure the successful hypotheses are
/// returned inside the error, in segment order.
pub fn translate_corpus(
    segments: &[Segment],
    client: &LlmClient,
    prompts: &PromptSet,
    cfg: &TranslateConfig,
) -> Result<Vec<Hypothesis>, TranslateFailure> {
    let langs = cfg.direction.languages();
    let results = bounded_map(segments, client.concurrency(), |_, seg| {
        let prompt = prompts.render(
            "translate",
            &vars([
                ("source_language", langs.source.clone()),
                ("target_language", langs.target.clone()),
                ("source", seg.source.clone()),
            ]),
        )?;
        let req = LlmRequest::new(
            client.provider_name(),
            &cfg.model,
            Purpose::Translate,
            vec![ChatMessage::user(prompt)],
        );
        let reply = client.cached_complete(&req)?;
        Ok::<_, MetricError>(Hypothesis {
            segment_id: seg.segment_id.clone(),
            hypothesis: clean_translation(&reply.text),
        })
    });
    let mut completed = Vec::with_capacity(results.len());
    let mut first_error = None;
    for r in results {
        match r {
            Ok(h) => completed.push(h),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        None => Ok(completed),
        Some(error) => Err(TranslateFailure { completed, error }),
    }
}
