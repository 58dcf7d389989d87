use super::{T2Mode, TaskInstance, TaskKind};
use crate::hashing::collapse_whitespace;
use crate::template::{vars, PromptSet, TemplateError};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::OnceLock;

/// Option label for a 0-based position: A, B, C…
pub fn label(i: usize) -> String {
    char::from(b'A' + u8::try_from(i).expect("at most 26 options")).to_string()
}

/// `A. text` lines, one per candidate.
pub fn format_options(candidates: &[String]) -> String {
    candidates
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{}. {}", label(i), collapse_whitespace(c)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Machine-readable answer contract appended to every task prompt.
pub fn answer_format(answers: usize) -> String {
    if answers == 1 {
        "Answer with the label of exactly 1 option. End your reply with a final line of the form:\nANSWER: <label>".to_string()
    } else {
        let slots = vec!["<label>"; answers].join(", ");
        format!(
            "Answer with the labels of exactly {answers} options. End your reply with a final line of the form:\nANSWER: {slots}"
        )
    }
}

fn count_word(n: usize) -> String {
    const WORDS: [&str; 11] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ];
    WORDS.get(n).map_or_else(|| n.to_string(), |w| w.to_string())
}

/// The prompt text for one instance.
pub fn render_prompt(inst: &TaskInstance, prompts: &PromptSet) -> Result<String, TemplateError> {
    let options = format_options(&inst.candidates);
    let fmt = answer_format(inst.key.len());
    let secondary = inst.secondary.clone().unwrap_or_default();
    match (inst.kind, inst.mode) {
        (TaskKind::T1, _) => prompts.render(
            "task1",
            &vars([
                ("sentence", inst.stem.clone()),
                ("english", secondary),
                ("options", options),
                ("answer_format", fmt),
            ]),
        ),
        (TaskKind::T2, T2Mode::Select) => prompts.render(
            "task2",
            &vars([("grammar", inst.stem.clone()), ("options", options), ("answer_format", fmt)]),
        ),
        (TaskKind::T2, T2Mode::Judge) => prompts.render(
            "task2_judge",
            &vars([
                ("grammar", inst.stem.clone()),
                ("sentence", secondary),
                ("options", options),
                ("answer_format", fmt),
            ]),
        ),
        (TaskKind::T3, _) => prompts.render(
            "task3",
            &vars([
                ("paragraph", inst.stem.clone()),
                ("count", inst.key.len().to_string()),
                ("options", options),
                ("answer_format", fmt),
            ]),
        ),
        (TaskKind::T4, _) => prompts.render(
            "task4",
            &vars([
                ("grammar", inst.stem.clone()),
                ("count_word", count_word(inst.candidates.len())),
                ("options", options),
                ("answer_format", fmt),
            ]),
        ),
    }
}

/// A reply reduced to labels, or marked unparseable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "labels", rename_all = "lowercase")]
pub enum Parsed {
    Labels(BTreeSet<String>),
    Unparseable,
}

impl Parsed {
    pub fn labels(&self) -> Option<&BTreeSet<String>> {
        match self {
            Parsed::Labels(l) => Some(l),
            Parsed::Unparseable => None,
        }
    }
}

fn marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)answer\s*:").expect("regex"))
}

fn bare_list() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\**\(?([A-Z])\)?\.?(?:\s*(?:,|and|&)\s*\(?([A-Z])\)?\.?)*\**$").expect("regex")
    })
}

fn letter() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Z]").expect("regex"))
}

/// Labels from a comma/`and` separated list such as `A, C` or `(B)`.
fn list_labels(s: &str) -> Option<BTreeSet<String>> {
    let s = s.trim().trim_end_matches('.').trim();
    if s.is_empty() || !bare_list().is_match(s) {
        return None;
    }
    let without_and = s.replace("and", " ");
    Some(letter().find_iter(&without_and).map(|m| m.as_str().to_string()).collect())
}

/// Extract the answer labels: the text after the last `ANSWER:` marker,
/// else a reply (or final line) that is only a label list.
pub fn parse_answer(raw: &str, inst: &TaskInstance) -> Parsed {
    let found = if let Some(m) = marker().find_iter(raw).last() {
        let tail = raw[m.end()..].lines().next().unwrap_or_default();
        list_labels(tail)
    } else {
        list_labels(raw).or_else(|| raw.lines().rev().find(|l| !l.trim().is_empty()).and_then(list_labels))
    };
    let Some(labels) = found else {
        return Parsed::Unparseable;
    };
    let offered: BTreeSet<String> = inst.labels().into_iter().collect();
    if !labels.is_subset(&offered) {
        return Parsed::Unparseable;
    }
    if inst.kind == TaskKind::T3 && labels.len() != inst.key.len() {
        return Parsed::Unparseable;
    }
    Parsed::Labels(labels)
}
