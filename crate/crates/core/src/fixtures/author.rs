//! Offline stand-in for every LLM role of the fixture pipeline.
//!
//! The author answers from a small authored knowledge base: grammar points
//! with cue words, example pairs, back-check outcomes and ungrammatical
//! variants. Evaluated models are mocks with known behaviour, so task
//! accuracies and translation scores of the fixture run are predictable.

use crate::hashing::collapse_whitespace;
use crate::llm::{
    AnswerKeyChannel, Completion, LlmRequest, MockProvider, Provider, ProviderError, Purpose, Usage,
};
use crate::metrics::{chrf_pp, ChrfParams};
use serde::Deserialize;
use serde_json::json;
use std::collections::HashMap;

pub const FIXTURE_PROVIDER: &str = "fixture";
pub const AUTHOR_MODEL: &str = "fixture-author";
pub const JUDGE_MODEL: &str = "fixture-judge";
/// Answers every task correctly and translates perfectly.
pub const ORACLE_MODEL: &str = "fixture-oracle";
/// Flips 30% of task answers and drops one word per translation.
pub const NOISY_MODEL: &str = "fixture-noisy";
/// Answers uniformly at random and reverses word order.
pub const RANDOM_MODEL: &str = "fixture-random";

pub const NOISY_FLIP_RATE: f64 = 0.3;

/// Authored knowledge base, shipped as `fixtures/author.json`.
pub const AUTHOR_BANK: &str = include_str!("../../../../fixtures/author.json");

#[derive(Debug, Clone, Deserialize)]
pub struct AuthoredPair {
    pub english: String,
    pub luxembourgish: String,
    pub incorrect: String,
    pub edit_summary: String,
    /// Back-check rationale when the pair is to be rejected.
    #[serde(default)]
    pub reject: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AuthoredPoint {
    pub key: String,
    pub cues: Vec<String>,
    pub description: String,
    /// Wording returned for table rows; near-duplicate of `description`.
    #[serde(default)]
    pub row_description: Option<String>,
    pub tags: Vec<String>,
    pub pairs: Vec<AuthoredPair>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AuthorBank {
    pub points: Vec<AuthoredPoint>,
}

impl AuthorBank {
    pub fn builtin() -> Self {
        serde_json::from_str(AUTHOR_BANK).expect("authored bank parses")
    }

    pub fn pair_count(&self) -> usize {
        self.points.iter().map(|p| p.pairs.len()).sum()
    }

    pub fn rejected_count(&self) -> usize {
        self.points
            .iter()
            .flat_map(|p| &p.pairs)
            .filter(|p| p.reject.is_some())
            .count()
    }

    fn point_by_description(&self, d: &str) -> Option<&AuthoredPoint> {
        let d = collapse_whitespace(d);
        self.points.iter().find(|p| {
            collapse_whitespace(&p.description) == d
                || p.row_description.as_deref().map(collapse_whitespace).as_deref() == Some(d.as_str())
        })
    }

    fn pair_by_sentence(&self, lb: &str) -> Option<(usize, &AuthoredPair)> {
        let lb = collapse_whitespace(lb);
        self.points
            .iter()
            .flat_map(|p| p.pairs.iter().enumerate())
            .find(|(_, p)| collapse_whitespace(&p.luxembourgish) == lb)
    }
}

fn fenced(v: serde_json::Value) -> String {
    format!("```json\n{}\n```", serde_json::to_string_pretty(&v).expect("json"))
}

fn quoted_block(prompt: &str) -> Option<&str> {
    let start = prompt.find("\"\"\"\n")? + 4;
    let len = prompt[start..].find("\n\"\"\"")?;
    Some(&prompt[start..start + len])
}

fn line_value<'a>(prompt: &'a str, prefix: &str) -> Option<&'a str> {
    prompt.lines().find_map(|l| l.strip_prefix(prefix)).map(str::trim)
}

fn missing(what: &str) -> ProviderError {
    ProviderError::Fatal(format!("fixture author cannot answer: {what}"))
}

/// Deterministic degradations applied to reference translations.
pub fn degrade(model: &str, reference: &str) -> String {
    let words: Vec<&str> = reference.split_whitespace().collect();
    match model {
        NOISY_MODEL if words.len() > 1 => {
            let drop = words.len() / 2;
            words
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != drop)
                .map(|(_, w)| *w)
                .collect::<Vec<_>>()
                .join(" ")
        }
        RANDOM_MODEL => words.iter().rev().copied().collect::<Vec<_>>().join(" "),
        _ => reference.to_string(),
    }
}

/// Judge score on the 0..=10 scale: chrF++ / 10, one decimal.
pub fn judge_value(hypothesis: &str, reference: &str) -> f64 {
    let c: f64 = chrf_pp(hypothesis, reference, &ChrfParams::default()).unwrap_or(0.0);
    c.round() / 10.0
}

/// Provider answering every purpose of the fixture pipeline.
pub struct FixtureAuthor {
    bank: AuthorBank,
    translations: HashMap<String, (String, String)>,
    oracle: MockProvider,
    noisy: MockProvider,
    random: MockProvider,
}

impl std::fmt::Debug for FixtureAuthor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FixtureAuthor").field("points", &self.bank.points.len()).finish()
    }
}

impl FixtureAuthor {
    pub fn new(keys: AnswerKeyChannel, seed: u64) -> Self {
        let bank = AuthorBank::builtin();
        let mut translations = HashMap::new();
        for p in bank.points.iter().flat_map(|p| &p.pairs) {
            let (en, lb) = (collapse_whitespace(&p.english), collapse_whitespace(&p.luxembourgish));
            translations.insert(en.clone(), (en.clone(), lb.clone()));
            translations.insert(lb.clone(), (en, lb));
        }
        FixtureAuthor {
            bank,
            translations,
            oracle: MockProvider::oracle(FIXTURE_PROVIDER, keys.clone(), 0.0, seed),
            noisy: MockProvider::oracle(FIXTURE_PROVIDER, keys, NOISY_FLIP_RATE, seed),
            random: MockProvider::uniform_random(FIXTURE_PROVIDER, seed),
        }
    }

    fn extract(&self, prompt: &str) -> Result<String, ProviderError> {
        let (haystack, row) = match line_value(prompt, "Table row:") {
            Some(r) => (r.to_lowercase(), true),
            None => (quoted_block(prompt).ok_or_else(|| missing("no excerpt"))?.to_lowercase(), false),
        };
        let items: Vec<_> = self
            .bank
            .points
            .iter()
            .filter(|p| p.cues.iter().any(|c| haystack.contains(&c.to_lowercase())))
            .map(|p| {
                let d = if row { p.row_description.as_ref().unwrap_or(&p.description) } else { &p.description };
                json!({ "description": d, "tags": p.tags })
            })
            .collect();
        Ok(fenced(json!(items)))
    }

    fn generate(&self, prompt: &str) -> Result<String, ProviderError> {
        let grammar = quoted_block(prompt).ok_or_else(|| missing("no grammar point"))?;
        let point = self.bank.point_by_description(grammar).ok_or_else(|| missing("unknown grammar point"))?;
        let items: Vec<_> = point
            .pairs
            .iter()
            .map(|p| json!({ "english": p.english, "luxembourgish": p.luxembourgish }))
            .collect();
        Ok(format!("Here are the pairs.\n\n{}", fenced(json!(items))))
    }

    fn backcheck(&self, prompt: &str) -> Result<String, ProviderError> {
        let lb = line_value(prompt, "Luxembourgish sentence:").ok_or_else(|| missing("no sentence"))?;
        let (i, pair) = self.bank.pair_by_sentence(lb).ok_or_else(|| missing("unknown sentence"))?;
        let v = match &pair.reject {
            Some(why) => json!({ "instantiates_rule": false, "translation_score": 6, "rationale": why }),
            None => json!({
                "instantiates_rule": true,
                "translation_score": 9 - (i % 3),
                "rationale": "The sentence applies the rule and renders the English faithfully.",
            }),
        };
        Ok(fenced(v))
    }

    fn forge(&self, prompt: &str) -> Result<String, ProviderError> {
        let lb = line_value(prompt, "Grammatical Luxembourgish sentence:").ok_or_else(|| missing("no sentence"))?;
        let (_, pair) = self.bank.pair_by_sentence(lb).ok_or_else(|| missing("unknown sentence"))?;
        Ok(fenced(json!({ "incorrect": pair.incorrect, "edit_summary": pair.edit_summary })))
    }

    fn translate(&self, model: &str, prompt: &str) -> Result<String, ProviderError> {
        let source = prompt
            .split_once("\n\n")
            .map(|(_, s)| collapse_whitespace(s))
            .ok_or_else(|| missing("no source text"))?;
        let target = match self.translations.get(&source) {
            Some((en, lb)) if *en == source => lb.clone(),
            Some((en, _)) => en.clone(),
            None => source.clone(),
        };
        Ok(degrade(model, &target))
    }

    fn judge(&self, prompt: &str) -> Result<String, ProviderError> {
        let reference = line_value(prompt, "Reference translation:").ok_or_else(|| missing("no reference"))?;
        let candidate = line_value(prompt, "Candidate translation:").unwrap_or_default();
        let score = judge_value(candidate, reference);
        Ok(format!("The candidate was compared with the reference.\nSCORE: {score:.1}"))
    }

    fn reply(&self, req: &LlmRequest) -> Result<String, ProviderError> {
        let prompt = req.last_user().unwrap_or_default();
        match req.purpose {
            Purpose::Extract => self.extract(prompt),
            Purpose::Generate => self.generate(prompt),
            Purpose::Backcheck => self.backcheck(prompt),
            Purpose::Forge => self.forge(prompt),
            Purpose::Translate => self.translate(&req.model_id, prompt),
            Purpose::Judge => self.judge(prompt),
            Purpose::Task => {
                let mock = match req.model_id.as_str() {
                    ORACLE_MODEL => &self.oracle,
                    NOISY_MODEL => &self.noisy,
                    RANDOM_MODEL => &self.random,
                    other => return Err(missing(&format!("no task behaviour for model {other}"))),
                };
                mock.complete(req).map(|c| c.text)
            }
        }
    }
}

impl Provider for FixtureAuthor {
    fn name(&self) -> &str {
        FIXTURE_PROVIDER
    }

    fn complete(&self, req: &LlmRequest) -> Result<Completion, ProviderError> {
        let text = self.reply(req)?;
        Ok(Completion {
            usage: Usage {
                prompt_tokens: req.messages.iter().map(|m| m.content.split_whitespace().count() as u64).sum(),
                completion_tokens: text.split_whitespace().count() as u64,
            },
            text,
            latency_ms: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ChatMessage;

    fn ask(author: &FixtureAuthor, model: &str, purpose: Purpose, prompt: &str) -> String {
        let req = LlmRequest::new(FIXTURE_PROVIDER, model, purpose, vec![ChatMessage::user(prompt)]);
        author.complete(&req).unwrap().text
    }

    #[test]
    fn bank_counts() {
        let bank = AuthorBank::builtin();
        assert_eq!(bank.points.len(), 6);
        assert_eq!(bank.pair_count(), 24);
        assert_eq!(bank.rejected_count(), 2);
        for p in bank.points.iter().flat_map(|p| &p.pairs) {
            let n = p.english.split_whitespace().count();
            assert!((12..=30).contains(&n), "{} has {n} words", p.english);
            assert_ne!(p.luxembourgish, p.incorrect);
        }
    }

    #[test]
    fn extraction_matches_cues() {
        let a = FixtureAuthor::new(AnswerKeyChannel::new(), 1);
        let reply = ask(&a, AUTHOR_MODEL, Purpose::Extract, "x\n\"\"\"\nThe dative case has forms.\n\"\"\"\n");
        assert!(reply.contains("In the dative case"));
        assert!(!reply.contains("Eifeler"));
        let reply = ask(&a, AUTHOR_MODEL, Purpose::Extract, "x\n\"\"\"\nNothing here.\n\"\"\"\n");
        assert!(reply.contains("[]"));
    }

    #[test]
    fn translations_degrade_by_model() {
        let a = FixtureAuthor::new(AnswerKeyChannel::new(), 1);
        let en = "Today I am going into town with my sister to buy a present for our mother.";
        let p = format!("Translate the following English text into Luxembourgish. Reply with the translation only.\n\n{en}");
        let oracle = ask(&a, ORACLE_MODEL, Purpose::Translate, &p);
        assert!(oracle.starts_with("Haut ginn ech"));
        let noisy = ask(&a, NOISY_MODEL, Purpose::Translate, &p);
        assert_eq!(noisy.split_whitespace().count() + 1, oracle.split_whitespace().count());
        let random = ask(&a, RANDOM_MODEL, Purpose::Translate, &p);
        assert!(random.starts_with("kafen."));
    }

    #[test]
    fn judge_value_is_one_decimal_chrf() {
        assert_eq!(judge_value("abc def", "abc def"), 10.0);
        let v = judge_value("abc", "abc def");
        assert!(v > 0.0 && v < 10.0);
        assert_eq!((v * 10.0).fract(), 0.0);
    }
}
