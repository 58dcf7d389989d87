use super::{Direction, Hypothesis, MetricError, Segment};
use crate::llm::{LlmClient, Purpose};
use crate::parallel::bounded_map;
use crate::reply::ask::{AskError, Asker, DEFAULT_ATTEMPTS};
use crate::template::{vars, PromptSet};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

#[derive(Debug, Clone)]
pub struct JudgeConfig {
    pub model: String,
    pub direction: Direction,
    pub attempts: u32,
}

impl JudgeConfig {
    pub fn new(model: &str, direction: Direction) -> Self {
        JudgeConfig {
            model: model.to_string(),
            direction,
            attempts: DEFAULT_ATTEMPTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeScore {
    pub segment_id: String,
    /// Score on the 0..=10 scale.
    pub value: f64,
    /// The reply's number lay outside 0..=10 and was clamped.
    pub clamped: bool,
}

fn score_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)score\s*[:=]\s*\**\s*(-?\d+(?:\.\d+)?)").expect("regex"))
}

fn out_of_ten() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(-?\d+(?:\.\d+)?)\s*/\s*10\b").expect("regex"))
}

/// Number from a judge reply: the last `SCORE: n` line, else a lone
/// number, else a single `n/10`.
pub fn parse_judge_score(reply: &str) -> Result<f64, String> {
    let parse = |s: &str| s.parse::<f64>().map_err(|e| e.to_string());
    if let Some(c) = score_line().captures_iter(reply).last() {
        return parse(&c[1]);
    }
    let trimmed = reply.trim().trim_end_matches('.');
    if let Ok(v) = trimmed.parse::<f64>() {
        return Ok(v);
    }
    let fractions: Vec<_> = out_of_ten().captures_iter(reply).collect();
    if fractions.len() == 1 {
        return parse(&fractions[0][1]);
    }
    Err("no `SCORE: <number>` line found".into())
}

pub fn judge_translation(
    segment: &Segment,
    hypothesis: &str,
    client: &LlmClient,
    prompts: &PromptSet,
    cfg: &JudgeConfig,
) -> Result<JudgeScore, MetricError> {
    let langs = cfg.direction.languages();
    let prompt = prompts.render(
        "judge",
        &vars([
            ("source_language", langs.source),
            ("target_language", langs.target),
            ("source", segment.source.clone()),
            ("reference", segment.reference.clone()),
            ("hypothesis", hypothesis.to_string()),
        ]),
    )?;
    let asker = Asker {
        client,
        model: &cfg.model,
        purpose: Purpose::Judge,
        prompts,
        attempts: cfg.attempts,
    };
    let raw = asker.ask(prompt, parse_judge_score).map_err(|e| match e {
        AskError::Llm(l) => MetricError::Llm(l),
        AskError::Unparseable { attempts, problem } => MetricError::UnparseableReply {
            segment_id: segment.segment_id.clone(),
            attempts,
            problem,
        },
    })?;
    let value = raw.clamp(0.0, 10.0);
    if value != raw {
        log::warn!("segment {}: judge score {raw} clamped to {value}", segment.segment_id);
    }
    Ok(JudgeScore {
        segment_id: segment.segment_id.clone(),
        value,
        clamped: value != raw,
    })
}

/// Judge every hypothesis against its segment; ids must align one to one.
pub fn judge_corpus(
    segments: &[Segment],
    hypotheses: &[Hypothesis],
    client: &LlmClient,
    prompts: &PromptSet,
    cfg: &JudgeConfig,
) -> Result<Vec<JudgeScore>, MetricError> {
    super::corpus::check_alignment(segments, hypotheses)?;
    let items: Vec<(&Segment, &Hypothesis)> = segments.iter().zip(hypotheses).collect();
    bounded_map(&items, client.concurrency(), |_, (s, h)| {
        judge_translation(s, &h.hypothesis, client, prompts, cfg)
    })
    .into_iter()
    .collect()
}
