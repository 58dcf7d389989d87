use super::points::{GrammarPoint, Provenance};
use super::windows::{RowContext, TextWindow};
use super::{AtelierError, LanguagePair};
use crate::llm::{LlmClient, Purpose};
use crate::reply::ask::{Asker, DEFAULT_ATTEMPTS};
use crate::reply::{parse_json_list, str_field};
use crate::template::{vars, PromptSet};
use serde_json::Value;

/// A piece of the grammar book handed to the extractor.
#[derive(Debug, Clone, PartialEq)]
pub enum Unit {
    Window(TextWindow),
    Row(RowContext),
}

impl Unit {
    pub fn unit_id(&self) -> String {
        match self {
            Unit::Window(w) => w.window_id.clone(),
            Unit::Row(r) => r.unit_id(),
        }
    }

    fn provenance(&self) -> Provenance {
        match self {
            Unit::Window(w) => Provenance::Window {
                chapter_id: w.chapter_id.clone(),
                window_id: w.window_id.clone(),
            },
            Unit::Row(r) => Provenance::Row {
                table_id: r.table_id.clone(),
                row_index: r.row_index,
            },
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Unit::Window(w) => w.sentences.iter().all(|s| s.trim().is_empty()),
            Unit::Row(r) => r.row_cells.iter().all(|c| c.trim().is_empty()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExtractConfig {
    pub model: String,
    pub languages: LanguagePair,
    pub attempts: u32,
}

impl ExtractConfig {
    pub fn new(model: &str) -> Self {
        ExtractConfig {
            model: model.to_string(),
            languages: LanguagePair::default(),
            attempts: DEFAULT_ATTEMPTS,
        }
    }
}

fn render(unit: &Unit, cfg: &ExtractConfig, prompts: &PromptSet) -> Result<String, AtelierError> {
    let target = cfg.languages.target.clone();
    Ok(match unit {
        Unit::Window(w) => prompts.render(
            "extract_window",
            &vars([
                ("target_language", target),
                ("chapter_title", w.chapter_title.clone()),
                ("text", w.text()),
            ]),
        )?,
        Unit::Row(r) => prompts.render(
            "extract_row",
            &vars([
                ("target_language", target),
                ("context_before", r.context_before.clone()),
                (
                    "header",
                    r.header.as_ref().map(|h| h.join(" | ")).unwrap_or_else(|| "(none)".into()),
                ),
                ("row", r.row_cells.join(" | ")),
                ("context_after", r.context_after.clone()),
            ]),
        )?,
    })
}

/// Parsed reply items: `(description, tags)`; items lacking a description
/// are dropped with a log line.
fn parse_points(reply: &str) -> Result<Vec<(String, Vec<String>)>, String> {
    let items = parse_json_list(reply)?;
    let mut out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        match str_field(item, "description") {
            Some(d) => {
                let tags = item
                    .get("tags")
                    .and_then(Value::as_array)
                    .map(|ts| {
                        ts.iter()
                            .filter_map(Value::as_str)
                            .map(str::to_string)
                            .collect()
                    })
                    .unwrap_or_default();
                out.push((d, tags));
            }
            None => log::warn!("extraction item {i} has no description; skipped"),
        }
    }
    Ok(out)
}

/// Ask the LLM for the grammar points embodied in one unit. Empty units
/// yield no points without an LLM call.
pub fn extract_grammar_points(
    unit: &Unit,
    client: &LlmClient,
    prompts: &PromptSet,
    cfg: &ExtractConfig,
) -> Result<Vec<GrammarPoint>, AtelierError> {
    if unit.is_empty() {
        return Ok(Vec::new());
    }
    let prompt = render(unit, cfg, prompts)?;
    let asker = Asker {
        client,
        model: &cfg.model,
        purpose: Purpose::Extract,
        prompts,
        attempts: cfg.attempts,
    };
    let items = asker
        .ask(prompt, parse_points)
        .map_err(|e| AtelierError::from_ask(&unit.unit_id(), e))?;
    let source = unit.provenance();
    Ok(items
        .into_iter()
        .map(|(d, tags)| GrammarPoint::new(&d, source.clone(), tags))
        .collect())
}
