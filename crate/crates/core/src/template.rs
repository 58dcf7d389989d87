//! Prompt templates with `{{name}}` placeholders.
//!
//! Each template kind declares the placeholders it may use. Loading a
//! template that mentions an undeclared placeholder fails immediately, so a
//! typo in an edited prompt file is caught before any LLM call is made.

use crate::hashing::sha256_hex;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum TemplateError {
    #[error("missing template `{0}`")]
    MissingTemplate(String),
    #[error("template `{template}` uses unknown placeholder `{placeholder}`")]
    UnknownPlaceholder {
        template: String,
        placeholder: String,
    },
    #[error("template `{template}` has an unterminated placeholder")]
    Unterminated { template: String },
    #[error("no value supplied for placeholder `{placeholder}` of template `{template}`")]
    MissingValue {
        template: String,
        placeholder: String,
    },
    #[error("cannot read template `{name}`: {message}")]
    Io { name: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Text(String),
    Var(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    name: String,
    source: String,
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(name: &str, source: &str, allowed: &[&str]) -> Result<Self, TemplateError> {
        let mut pieces = Vec::new();
        let mut rest = source;
        while let Some(open) = rest.find("{{") {
            if open > 0 {
                pieces.push(Piece::Text(rest[..open].to_string()));
            }
            let after = &rest[open + 2..];
            let close = after.find("}}").ok_or_else(|| TemplateError::Unterminated {
                template: name.to_string(),
            })?;
            let var = after[..close].trim();
            if !allowed.contains(&var) {
                return Err(TemplateError::UnknownPlaceholder {
                    template: name.to_string(),
                    placeholder: var.to_string(),
                });
            }
            pieces.push(Piece::Var(var.to_string()));
            rest = &after[close + 2..];
        }
        if !rest.is_empty() {
            pieces.push(Piece::Text(rest.to_string()));
        }
        Ok(Template {
            name: name.to_string(),
            source: source.to_string(),
            pieces,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn fingerprint(&self) -> String {
        sha256_hex(self.source.as_bytes())
    }

    pub fn render(&self, vars: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
        let mut out = String::with_capacity(self.source.len() + 64);
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Var(v) => {
                    let val = vars.get(v.as_str()).ok_or_else(|| TemplateError::MissingValue {
                        template: self.name.clone(),
                        placeholder: v.clone(),
                    })?;
                    out.push_str(val);
                }
            }
        }
        Ok(out.trim_end().to_string())
    }
}

/// Every template kind the pipeline uses, with its allowed placeholders.
pub const TEMPLATE_KINDS: &[(&str, &[&str])] = &[
    (
        "extract_window",
        &["target_language", "chapter_title", "text"],
    ),
    (
        "extract_row",
        &["target_language", "context_before", "header", "row", "context_after"],
    ),
    (
        "generate",
        &["target_language", "source_language", "grammar", "count", "min_words", "max_words"],
    ),
    (
        "backcheck",
        &["target_language", "source_language", "grammar", "english", "luxembourgish"],
    ),
    ("forge", &["target_language", "grammar", "sentence"]),
    ("repair", &["problem"]),
    ("task1", &["sentence", "english", "options", "answer_format"]),
    ("task2", &["grammar", "options", "answer_format"]),
    ("task2_judge", &["grammar", "sentence", "options", "answer_format"]),
    ("task3", &["paragraph", "count", "options", "answer_format"]),
    ("task4", &["grammar", "count_word", "options", "answer_format"]),
    ("translate", &["source_language", "target_language", "source"]),
    (
        "judge",
        &["source_language", "target_language", "source", "reference", "hypothesis"],
    ),
];

fn builtin(name: &str) -> Option<&'static str> {
    Some(match name {
        "extract_window" => include_str!("../../../prompts/extract_window.txt"),
        "extract_row" => include_str!("../../../prompts/extract_row.txt"),
        "generate" => include_str!("../../../prompts/generate.txt"),
        "backcheck" => include_str!("../../../prompts/backcheck.txt"),
        "forge" => include_str!("../../../prompts/forge.txt"),
        "repair" => include_str!("../../../prompts/repair.txt"),
        "task1" => include_str!("../../../prompts/task1.txt"),
        "task2" => include_str!("../../../prompts/task2.txt"),
        "task2_judge" => include_str!("../../../prompts/task2_judge.txt"),
        "task3" => include_str!("../../../prompts/task3.txt"),
        "task4" => include_str!("../../../prompts/task4.txt"),
        "translate" => include_str!("../../../prompts/translate.txt"),
        "judge" => include_str!("../../../prompts/judge.txt"),
        _ => return None,
    })
}

fn allowed_for(name: &str) -> Option<&'static [&'static str]> {
    TEMPLATE_KINDS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, a)| *a)
}

/// The full set of prompt templates.
#[derive(Debug, Clone)]
pub struct PromptSet {
    templates: BTreeMap<String, Template>,
}

impl PromptSet {
    /// Templates compiled into the binary.
    pub fn builtin() -> Self {
        let templates = TEMPLATE_KINDS
            .iter()
            .map(|(name, allowed)| {
                let t = Template::parse(name, builtin(name).expect("builtin exists"), allowed)
                    .expect("builtin templates are valid");
                (name.to_string(), t)
            })
            .collect();
        PromptSet { templates }
    }

    /// Load `<dir>/<name>.txt` for each kind, falling back to the builtin
    /// text when a file is absent.
    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = Self::builtin();
        for (name, allowed) in TEMPLATE_KINDS {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(|e| TemplateError::Io {
                    name: name.to_string(),
                    message: e.to_string(),
                })?;
                set.templates
                    .insert(name.to_string(), Template::parse(name, &text, allowed)?);
            }
        }
        Ok(set)
    }

    /// Replace or add one template from source text.
    pub fn with_template(mut self, name: &str, text: &str) -> Result<Self, TemplateError> {
        let allowed =
            allowed_for(name).ok_or_else(|| TemplateError::MissingTemplate(name.to_string()))?;
        self.templates
            .insert(name.to_string(), Template::parse(name, text, allowed)?);
        Ok(self)
    }

    pub fn without_template(mut self, name: &str) -> Self {
        self.templates.remove(name);
        self
    }

    pub fn get(&self, name: &str) -> Result<&Template, TemplateError> {
        self.templates
            .get(name)
            .ok_or_else(|| TemplateError::MissingTemplate(name.to_string()))
    }

    pub fn render(&self, name: &str, vars: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
        self.get(name)?.render(vars)
    }

    /// Name → SHA-256 of the template text.
    pub fn fingerprints(&self) -> BTreeMap<String, String> {
        self.templates
            .iter()
            .map(|(k, t)| (k.clone(), t.fingerprint()))
            .collect()
    }
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Build a placeholder map from `(name, value)` pairs.
pub fn vars<const N: usize>(pairs: [(&'static str, String); N]) -> BTreeMap<&'static str, String> {
    pairs.into_iter().collect()
}
