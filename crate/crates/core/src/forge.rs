//! Back-checking of generated pairs and minimal-pair forging.

use crate::atelier::{ExamplePair, GrammarPoint, LanguagePair, PairStatus};
use crate::hashing::{collapse_whitespace, short_id};
use crate::llm::{LlmClient, LlmError, Purpose};
use crate::reply::ask::{AskError, Asker, DEFAULT_ATTEMPTS};
use crate::reply::{parse_json, str_field};
use crate::template::{vars, PromptSet, TemplateError};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ForgeError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("pair {pair_id}: reply unparseable after {attempts} attempts: {problem}")]
    UnparseableReply {
        pair_id: String,
        attempts: u32,
        problem: String,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("pair {pair_id} has no verdict")]
    MissingVerdict { pair_id: String },
    #[error("pair {pair_id} has more than one verdict")]
    DuplicateVerdict { pair_id: String },
    #[error("verdict references unknown pair {pair_id}")]
    UnknownPair { pair_id: String },
    #[error("pair {pair_id}: ungrammatical variant equals the original")]
    DegenerateContrast { pair_id: String },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

impl ForgeError {
    fn from_ask(pair_id: &str, e: AskError) -> Self {
        match e {
            AskError::Llm(l) => ForgeError::Llm(l),
            AskError::Unparseable { attempts, problem } => ForgeError::UnparseableReply {
                pair_id: pair_id.to_string(),
                attempts,
                problem,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackcheckVerdict {
    pub pair_id: String,
    pub instantiates_rule: bool,
    /// Judge rating on the 0..=10 scale.
    pub translation_score: f64,
    pub judge_model: String,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone)]
pub struct ForgeConfig {
    pub model: String,
    pub languages: LanguagePair,
    pub attempts: u32,
}

impl ForgeConfig {
    pub fn new(model: &str) -> Self {
        ForgeConfig {
            model: model.to_string(),
            languages: LanguagePair::default(),
            attempts: DEFAULT_ATTEMPTS,
        }
    }
}

fn parse_verdict(reply: &str) -> Result<(bool, f64, String), String> {
    let v = parse_json(reply)?;
    let rule = v
        .get("instantiates_rule")
        .and_then(Value::as_bool)
        .ok_or("missing boolean `instantiates_rule`")?;
    let score = v
        .get("translation_score")
        .and_then(Value::as_f64)
        .ok_or("missing number `translation_score`")?;
    if !(0.0..=10.0).contains(&score) {
        return Err(format!("translation_score {score} outside 0..=10"));
    }
    Ok((rule, score, str_field(&v, "rationale").unwrap_or_default()))
}

/// Have the judge model check one unchecked pair against its grammar point.
pub fn backcheck_pair(
    pair: &ExamplePair,
    gp: &GrammarPoint,
    client: &LlmClient,
    prompts: &PromptSet,
    cfg: &ForgeConfig,
) -> Result<BackcheckVerdict, ForgeError> {
    if pair.status != PairStatus::Unchecked {
        return Err(ForgeError::Precondition(format!(
            "pair {} is {:?}, expected unchecked",
            pair.pair_id, pair.status
        )));
    }
    let prompt = prompts.render(
        "backcheck",
        &vars([
            ("target_language", cfg.languages.target.clone()),
            ("source_language", cfg.languages.source.clone()),
            ("grammar", gp.description.clone()),
            ("english", pair.english.clone()),
            ("luxembourgish", pair.luxembourgish.clone()),
        ]),
    )?;
    let asker = Asker {
        client,
        model: &cfg.model,
        purpose: Purpose::Backcheck,
        prompts,
        attempts: cfg.attempts,
    };
    let (rule, score, rationale) = asker
        .ask(prompt, parse_verdict)
        .map_err(|e| ForgeError::from_ask(&pair.pair_id, e))?;
    Ok(BackcheckVerdict {
        pair_id: pair.pair_id.clone(),
        instantiates_rule: rule,
        translation_score: score,
        judge_model: cfg.model.clone(),
        rationale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub min_score: f64,
    pub require_rule: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            min_score: 0.0,
            require_rule: true,
        }
    }
}

impl FilterPolicy {
    pub fn passes(&self, v: &BackcheckVerdict) -> bool {
        (v.instantiates_rule || !self.require_rule) && v.translation_score >= self.min_score
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub verified: Vec<ExamplePair>,
    pub rejected: Vec<ExamplePair>,
}

impl FilterOutcome {
    /// Fraction of pairs kept; 0 for an empty input.
    pub fn retention(&self) -> f64 {
        let total = self.verified.len() + self.rejected.len();
        if total == 0 {
            0.0
        } else {
            self.verified.len() as f64 / total as f64
        }
    }
}

/// Partition unchecked pairs by their verdicts. Each pair needs exactly one
/// verdict and every verdict must name a known pair.
pub fn filter_verified(
    pairs: &[ExamplePair],
    verdicts: &[BackcheckVerdict],
    policy: &FilterPolicy,
) -> Result<FilterOutcome, ForgeError> {
    let known: BTreeSet<&str> = pairs.iter().map(|p| p.pair_id.as_str()).collect();
    let mut by_pair: BTreeMap<&str, &BackcheckVerdict> = BTreeMap::new();
    for v in verdicts {
        if !known.contains(v.pair_id.as_str()) {
            return Err(ForgeError::UnknownPair {
                pair_id: v.pair_id.clone(),
            });
        }
        if by_pair.insert(v.pair_id.as_str(), v).is_some() {
            return Err(ForgeError::DuplicateVerdict {
                pair_id: v.pair_id.clone(),
            });
        }
    }
    let mut out = FilterOutcome {
        verified: Vec::new(),
        rejected: Vec::new(),
    };
    for p in pairs {
        let v = by_pair.get(p.pair_id.as_str()).ok_or_else(|| ForgeError::MissingVerdict {
            pair_id: p.pair_id.clone(),
        })?;
        let mut p = p.clone();
        if policy.passes(v) {
            p.transition(PairStatus::Verified).map_err(ForgeError::Precondition)?;
            out.verified.push(p);
        } else {
            p.transition(PairStatus::Rejected).map_err(ForgeError::Precondition)?;
            out.rejected.push(p);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalPair {
    pub mp_id: String,
    pub gp_id: String,
    pub pair_id: String,
    pub correct: String,
    pub incorrect: String,
    pub edit_summary: String,
    /// Word-level Levenshtein distance between the two sentences.
    pub edit_distance: u32,
}

fn normalized(s: &str) -> String {
    collapse_whitespace(s).to_lowercase()
}

/// Word-level Levenshtein distance.
pub fn word_edit_distance(a: &str, b: &str) -> u32 {
    let a: Vec<&str> = a.split_whitespace().collect();
    let b: Vec<&str> = b.split_whitespace().collect();
    let mut prev: Vec<u32> = (0..=b.len() as u32).collect();
    for (i, wa) in a.iter().enumerate() {
        let mut cur = vec![i as u32 + 1; b.len() + 1];
        for (j, wb) in b.iter().enumerate() {
            let sub = prev[j] + u32::from(wa != wb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

fn parse_contrast(reply: &str) -> Result<(String, String), String> {
    let v = parse_json(reply)?;
    let incorrect = str_field(&v, "incorrect").ok_or("missing string `incorrect`")?;
    Ok((incorrect, str_field(&v, "edit_summary").unwrap_or_default()))
}

/// Elicit an ungrammatical counterpart of a verified pair's target sentence.
pub fn forge_minimal_pair(
    pair: &ExamplePair,
    gp: &GrammarPoint,
    client: &LlmClient,
    prompts: &PromptSet,
    cfg: &ForgeConfig,
) -> Result<MinimalPair, ForgeError> {
    if pair.status != PairStatus::Verified {
        return Err(ForgeError::Precondition(format!(
            "pair {} is {:?}, expected verified",
            pair.pair_id, pair.status
        )));
    }
    let prompt = prompts.render(
        "forge",
        &vars([
            ("target_language", cfg.languages.target.clone()),
            ("grammar", gp.description.clone()),
            ("sentence", pair.luxembourgish.clone()),
        ]),
    )?;
    let asker = Asker {
        client,
        model: &cfg.model,
        purpose: Purpose::Forge,
        prompts,
        attempts: cfg.attempts,
    };
    let (incorrect, edit_summary) = asker
        .ask(prompt, parse_contrast)
        .map_err(|e| ForgeError::from_ask(&pair.pair_id, e))?;
    let correct = pair.luxembourgish.clone();
    let incorrect = collapse_whitespace(&incorrect);
    if normalized(&incorrect) == normalized(&correct) {
        return Err(ForgeError::DegenerateContrast {
            pair_id: pair.pair_id.clone(),
        });
    }
    Ok(MinimalPair {
        mp_id: short_id("mp", &[&gp.gp_id, &correct, &incorrect]),
        gp_id: gp.gp_id.clone(),
        pair_id: pair.pair_id.clone(),
        edit_distance: word_edit_distance(&correct, &incorrect),
        correct,
        incorrect,
        edit_summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atelier::{LengthBand, Provenance};
    use crate::llm::{MockProvider, ScriptStep};
    use std::sync::Arc;

    fn gp() -> GrammarPoint {
        GrammarPoint::new(
            "Masculine articles alternate de/den/dem by case.",
            Provenance::Row { table_id: "t1".into(), row_index: 0 },
            vec![],
        )
    }

    fn pair() -> ExamplePair {
        ExamplePair::new(&gp().gp_id, "The man sees the dog.", "De Mann gesäit den Hond.", LengthBand::default())
    }

    fn client(replies: &[&str]) -> LlmClient {
        LlmClient::new(Arc::new(MockProvider::scripted(
            "m",
            replies.iter().map(|r| ScriptStep::reply(*r)).collect(),
        )))
    }

    fn verdict(id: &str, rule: bool, score: f64) -> BackcheckVerdict {
        BackcheckVerdict {
            pair_id: id.into(),
            instantiates_rule: rule,
            translation_score: score,
            judge_model: "j".into(),
            rationale: String::new(),
        }
    }

    #[test]
    fn backcheck_parses_verdict() {
        let c = client(&["```json\n{\"instantiates_rule\": true, \"translation_score\": 9, \"rationale\": \"ok\"}\n```"]);
        let v = backcheck_pair(&pair(), &gp(), &c, &PromptSet::builtin(), &ForgeConfig::new("judge")).unwrap();
        assert!(v.instantiates_rule);
        assert_eq!(v.translation_score, 9.0);
        assert_eq!(v.judge_model, "judge");
        assert_eq!(v.pair_id, pair().pair_id);
    }

    #[test]
    fn backcheck_rejects_out_of_range_then_unparseable() {
        let bad = "```json\n{\"instantiates_rule\": true, \"translation_score\": 11}\n```";
        let c = client(&[bad, bad, bad]);
        let err = backcheck_pair(&pair(), &gp(), &c, &PromptSet::builtin(), &ForgeConfig::new("j")).unwrap_err();
        assert!(matches!(err, ForgeError::UnparseableReply { attempts: 3, .. }));
    }

    #[test]
    fn backcheck_requires_unchecked() {
        let mut p = pair();
        p.transition(PairStatus::Verified).unwrap();
        assert!(matches!(
            backcheck_pair(&p, &gp(), &client(&[]), &PromptSet::builtin(), &ForgeConfig::new("j")),
            Err(ForgeError::Precondition(_))
        ));
    }

    #[test]
    fn policy_gates() {
        let pol = FilterPolicy { min_score: 6.0, require_rule: true };
        assert!(pol.passes(&verdict("x", true, 8.0)));
        let pol = FilterPolicy { min_score: 0.0, require_rule: true };
        assert!(!pol.passes(&verdict("x", false, 9.5)));
        let pol = FilterPolicy { min_score: 0.0, require_rule: false };
        assert!(pol.passes(&verdict("x", false, 0.0)));
    }

    #[test]
    fn filter_errors() {
        let p = pair();
        assert!(matches!(
            filter_verified(&[p.clone()], &[], &FilterPolicy::default()),
            Err(ForgeError::MissingVerdict { .. })
        ));
        let v = verdict(&p.pair_id, true, 5.0);
        assert!(matches!(
            filter_verified(&[p.clone()], &[v.clone(), v.clone()], &FilterPolicy::default()),
            Err(ForgeError::DuplicateVerdict { .. })
        ));
        assert!(matches!(
            filter_verified(&[p], &[v, verdict("ghost", true, 1.0)], &FilterPolicy::default()),
            Err(ForgeError::UnknownPair { .. })
        ));
    }

    #[test]
    fn ninety_four_of_hundred() {
        let pairs: Vec<ExamplePair> = (0..100)
            .map(|i| ExamplePair::new("gp-x", &format!("sentence {i}"), &format!("saz {i}"), LengthBand::default()))
            .collect();
        let verdicts: Vec<_> = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| verdict(&p.pair_id, i % 17 != 3 || i >= 96, 7.0))
            .collect();
        let out = filter_verified(&pairs, &verdicts, &FilterPolicy::default()).unwrap();
        assert_eq!(out.verified.len(), 94);
        assert_eq!(out.retention(), 0.94);
        assert!(out.verified.iter().all(|p| p.status == PairStatus::Verified));
        assert!(out.rejected.iter().all(|p| p.status == PairStatus::Rejected));
    }

    #[test]
    fn forges_article_swap() {
        let mut p = pair();
        p.transition(PairStatus::Verified).unwrap();
        let c = client(&["```json\n{\"incorrect\": \"De Mann gesäit de Hond.\", \"edit_summary\": \"accusative den replaced by nominative de\"}\n```"]);
        let mp = forge_minimal_pair(&p, &gp(), &c, &PromptSet::builtin(), &ForgeConfig::new("g")).unwrap();
        assert_eq!(mp.correct, "De Mann gesäit den Hond.");
        assert_eq!(mp.incorrect, "De Mann gesäit de Hond.");
        assert_eq!(mp.edit_distance, 1);
        assert_eq!(mp.gp_id, gp().gp_id);
    }

    #[test]
    fn degenerate_contrast_and_precondition() {
        let mut p = pair();
        assert!(matches!(
            forge_minimal_pair(&p, &gp(), &client(&[]), &PromptSet::builtin(), &ForgeConfig::new("g")),
            Err(ForgeError::Precondition(_))
        ));
        p.transition(PairStatus::Verified).unwrap();
        let c = client(&["```json\n{\"incorrect\": \"de mann  gesäit den Hond.\"}\n```"]);
        assert!(matches!(
            forge_minimal_pair(&p, &gp(), &c, &PromptSet::builtin(), &ForgeConfig::new("g")),
            Err(ForgeError::DegenerateContrast { .. })
        ));
    }

    #[test]
    fn edit_distance() {
        assert_eq!(word_edit_distance("a b c", "a b c"), 0);
        assert_eq!(word_edit_distance("a b c", "a x c"), 1);
        assert_eq!(word_edit_distance("a b c", "a c"), 1);
        assert_eq!(word_edit_distance("", "a b"), 2);
    }
}
