use super::points::GrammarPoint;
use super::{AtelierError, LanguagePair};
use crate::hashing::{collapse_whitespace, short_id};
use crate::llm::{LlmClient, Purpose};
use crate::reply::ask::{Asker, DEFAULT_ATTEMPTS};
use crate::reply::{parse_json_list, str_field};
use crate::template::{vars, PromptSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairStatus {
    Unchecked,
    Verified,
    Rejected,
}

/// Requested English sentence length, in words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBand {
    pub min: u32,
    pub max: u32,
}

impl Default for LengthBand {
    fn default() -> Self {
        LengthBand { min: 12, max: 30 }
    }
}

impl LengthBand {
    pub fn contains(&self, words: u32) -> bool {
        (self.min..=self.max).contains(&words)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamplePair {
    pub pair_id: String,
    pub gp_ids: Vec<String>,
    pub english: String,
    pub luxembourgish: String,
    pub target_length: LengthBand,
    pub english_words: u32,
    pub luxembourgish_words: u32,
    /// English word count fell inside `target_length`.
    pub length_ok: bool,
    pub status: PairStatus,
}

pub fn word_count(s: &str) -> u32 {
    s.split_whitespace().count() as u32
}

impl ExamplePair {
    pub fn new(gp_id: &str, english: &str, luxembourgish: &str, band: LengthBand) -> Self {
        let english = collapse_whitespace(english);
        let luxembourgish = collapse_whitespace(luxembourgish);
        let english_words = word_count(&english);
        ExamplePair {
            pair_id: short_id("pair", &[gp_id, &english, &luxembourgish]),
            gp_ids: vec![gp_id.to_string()],
            luxembourgish_words: word_count(&luxembourgish),
            english,
            luxembourgish,
            target_length: band,
            english_words,
            length_ok: band.contains(english_words),
            status: PairStatus::Unchecked,
        }
    }

    /// Move out of `unchecked`; any other transition is refused.
    pub fn transition(&mut self, to: PairStatus) -> Result<(), String> {
        match (self.status, to) {
            (PairStatus::Unchecked, PairStatus::Verified | PairStatus::Rejected) => {
                self.status = to;
                Ok(())
            }
            (from, to) => Err(format!("pair {}: illegal status change {from:?} -> {to:?}", self.pair_id)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenerateConfig {
    pub model: String,
    pub count: u32,
    pub length: LengthBand,
    pub languages: LanguagePair,
    pub attempts: u32,
}

impl GenerateConfig {
    pub fn new(model: &str) -> Self {
        GenerateConfig {
            model: model.to_string(),
            count: 3,
            length: LengthBand::default(),
            languages: LanguagePair::default(),
            attempts: DEFAULT_ATTEMPTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateOutcome {
    pub pairs: Vec<ExamplePair>,
    /// Reply items that failed validation, one message each.
    pub rejects: Vec<String>,
}

/// Ask for `count` bilingual example pairs instantiating `gp`. Valid items
/// are salvaged from a partially malformed list; a reply with no JSON list
/// at all is retried.
pub fn generate_pairs(
    gp: &GrammarPoint,
    client: &LlmClient,
    prompts: &PromptSet,
    cfg: &GenerateConfig,
) -> Result<GenerateOutcome, AtelierError> {
    if cfg.count == 0 {
        return Err(AtelierError::InvalidArgument("count must be >= 1".into()));
    }
    if cfg.length.min > cfg.length.max {
        return Err(AtelierError::InvalidArgument(format!(
            "length min {} exceeds max {}",
            cfg.length.min, cfg.length.max
        )));
    }
    let prompt = prompts.render(
        "generate",
        &vars([
            ("target_language", cfg.languages.target.clone()),
            ("source_language", cfg.languages.source.clone()),
            ("grammar", gp.description.clone()),
            ("count", cfg.count.to_string()),
            ("min_words", cfg.length.min.to_string()),
            ("max_words", cfg.length.max.to_string()),
        ]),
    )?;
    let asker = Asker {
        client,
        model: &cfg.model,
        purpose: Purpose::Generate,
        prompts,
        attempts: cfg.attempts,
    };
    let items = asker
        .ask(prompt, |r| parse_json_list(r))
        .map_err(|e| AtelierError::from_ask(&gp.gp_id, e))?;

    let mut pairs: Vec<ExamplePair> = Vec::new();
    let mut rejects = Vec::new();
    for (i, item) in items.iter().enumerate() {
        match (str_field(item, "english"), str_field(item, "luxembourgish")) {
            (Some(en), Some(lb)) => {
                let p = ExamplePair::new(&gp.gp_id, &en, &lb, cfg.length);
                if !p.length_ok {
                    log::info!(
                        "pair {} has {} English words, outside {}..={}",
                        p.pair_id, p.english_words, cfg.length.min, cfg.length.max
                    );
                }
                if pairs.iter().all(|q| q.pair_id != p.pair_id) {
                    pairs.push(p);
                }
            }
            _ => {
                let msg = format!("{}: item {i} lacks english/luxembourgish", gp.gp_id);
                log::warn!("{msg}");
                rejects.push(msg);
            }
        }
    }
    pairs.truncate(cfg.count as usize);
    Ok(GenerateOutcome { pairs, rejects })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atelier::Provenance;
    use crate::llm::{MockProvider, ScriptStep};
    use std::sync::Arc;

    fn gp() -> GrammarPoint {
        GrammarPoint::new(
            "Masculine articles alternate de/den/dem by case.",
            Provenance::Row { table_id: "t1".into(), row_index: 0 },
            vec![],
        )
    }

    fn client(reply: &str) -> LlmClient {
        LlmClient::new(Arc::new(MockProvider::scripted("m", vec![ScriptStep::reply(reply)])))
    }

    #[test]
    fn three_pairs() {
        let reply = r#"```json
[{"english": "The man sees the dog in the garden behind the old house today.", "luxembourgish": "De Mann gesäit den Hond am Gaart hannert dem alen Haus haut."},
 {"english": "I give the man the book.", "luxembourgish": "Ech ginn dem Mann d'Buch."},
 {"english": "The dog sleeps.", "luxembourgish": "Den Hond schléift."}]
```"#;
        let out = generate_pairs(&gp(), &client(reply), &PromptSet::builtin(), &GenerateConfig::new("g")).unwrap();
        assert_eq!(out.pairs.len(), 3);
        assert!(out.rejects.is_empty());
        assert!(out.pairs.iter().all(|p| p.status == PairStatus::Unchecked && p.gp_ids == vec![gp().gp_id]));
        assert!(out.pairs[0].length_ok);
        assert!(!out.pairs[2].length_ok);
    }

    #[test]
    fn count_zero_rejected() {
        let mut cfg = GenerateConfig::new("g");
        cfg.count = 0;
        assert!(matches!(
            generate_pairs(&gp(), &client("[]"), &PromptSet::builtin(), &cfg),
            Err(AtelierError::InvalidArgument(_))
        ));
        let mut cfg = GenerateConfig::new("g");
        cfg.length = LengthBand { min: 9, max: 3 };
        assert!(generate_pairs(&gp(), &client("[]"), &PromptSet::builtin(), &cfg).is_err());
    }

    #[test]
    fn partial_salvage() {
        let reply = r#"```json
[{"english": "a b", "luxembourgish": "c d"}, {"english": "e f"}, {"english": "g h", "luxembourgish": "i j"}]
```"#;
        let out = generate_pairs(&gp(), &client(reply), &PromptSet::builtin(), &GenerateConfig::new("g")).unwrap();
        assert_eq!(out.pairs.len(), 2);
        assert_eq!(out.rejects.len(), 1);
    }

    #[test]
    fn status_transitions() {
        let mut p = ExamplePair::new("gp-1", "a", "b", LengthBand::default());
        assert!(p.transition(PairStatus::Unchecked).is_err());
        p.transition(PairStatus::Verified).unwrap();
        assert!(p.transition(PairStatus::Rejected).is_err());
    }
}
