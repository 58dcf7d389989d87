//! Grammar-document ingestion: interchange parsing, chapter segmentation by
//! font size, and section classification.

use crate::hashing::collapse_whitespace;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum InspectorError {
    #[error("malformed interchange file at `{path}`: {message}")]
    MalformedInterchange { path: String, message: String },
    #[error("document has no text blocks")]
    EmptyDocument,
    #[error("no syntax or morphology sections found; chapter titles: {titles:?}")]
    NoGrammarSections { titles: Vec<String> },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn malformed(path: impl Into<String>, message: impl Into<String>) -> InspectorError {
    InspectorError::MalformedInterchange {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextBlock {
    pub page: u32,
    pub font_size: f64,
    pub text: String,
    #[serde(default, skip_serializing)]
    pub block_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTable {
    pub table_id: String,
    /// Text block the table is positioned at; row context before the table
    /// is drawn from blocks preceding it.
    pub anchor_block: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<String>>,
}

impl DocTable {
    pub fn arity(&self) -> usize {
        self.rows.first().map(Vec::len).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub doc_id: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub blocks: Vec<TextBlock>,
    #[serde(default)]
    pub tables: Vec<DocTable>,
}

impl SourceDocument {
    /// Parse and validate interchange JSON text.
    pub fn from_json(text: &str) -> Result<Self, InspectorError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut doc: SourceDocument = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            malformed(path, e.into_inner().to_string())
        })?;
        for (i, b) in doc.blocks.iter_mut().enumerate() {
            b.block_index = i;
        }
        doc.validate()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), InspectorError> {
        if self.doc_id.trim().is_empty() {
            return Err(malformed("doc_id", "must be non-empty"));
        }
        if self.blocks.is_empty() {
            return Err(InspectorError::EmptyDocument);
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if !(b.font_size.is_finite() && b.font_size > 0.0) {
                return Err(malformed(format!("blocks[{i}].font_size"), "must be a positive number"));
            }
            if collapse_whitespace(&b.text).is_empty() {
                return Err(malformed(format!("blocks[{i}].text"), "must be non-empty"));
            }
        }
        for (t, table) in self.tables.iter().enumerate() {
            if table.anchor_block >= self.blocks.len() {
                return Err(malformed(
                    format!("tables[{t}].anchor_block"),
                    format!("{} is not a block index (have {})", table.anchor_block, self.blocks.len()),
                ));
            }
            if table.rows.is_empty() {
                return Err(malformed(format!("tables[{t}].rows"), "must contain at least one row"));
            }
            let arity = table.arity();
            if arity == 0 {
                return Err(malformed(format!("tables[{t}].rows[0]"), "arity must be >= 1"));
            }
            for (r, row) in table.rows.iter().enumerate() {
                if row.len() != arity {
                    return Err(malformed(
                        format!("tables[{t}].rows[{r}]"),
                        format!("has {} cells, expected {arity}", row.len()),
                    ));
                }
            }
            if let Some(h) = &table.header {
                if h.len() != arity {
                    return Err(malformed(
                        format!("tables[{t}].header"),
                        format!("has {} cells, expected {arity}", h.len()),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn title(&self) -> &str {
        self.metadata.get("title").map(String::as_str).unwrap_or(&self.doc_id)
    }
}

/// Read and validate an interchange file.
pub fn parse_interchange(path: &Path) -> Result<SourceDocument, InspectorError> {
    let text = std::fs::read_to_string(path).map_err(|e| InspectorError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    SourceDocument::from_json(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionKind {
    Syntax,
    Morphology,
    Lexicon,
    Phonology,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chapter {
    pub chapter_id: String,
    pub title: String,
    /// Half-open `[start, end)` range into the document blocks.
    pub block_range: (usize, usize),
    /// Index of the heading block, absent for front matter.
    pub heading_block: Option<usize>,
    pub section_kind: SectionKind,
}

impl Chapter {
    /// Block indices holding body text (the heading excluded).
    pub fn body_blocks(&self) -> impl Iterator<Item = usize> + '_ {
        (self.block_range.0..self.block_range.1).filter(move |i| Some(*i) != self.heading_block)
    }
}

pub const DEFAULT_HEADING_RATIO: f64 = 1.25;

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Split the document into chapters. A block is a heading when its font
/// size is at least `heading_ratio` times the median block font size;
/// blocks before the first heading form a "front-matter" chapter.
pub fn segment_chapters(doc: &SourceDocument, heading_ratio: f64) -> Vec<Chapter> {
    if doc.blocks.is_empty() {
        return Vec::new();
    }
    let mut sizes: Vec<f64> = doc.blocks.iter().map(|b| b.font_size).collect();
    let threshold = heading_ratio * median(&mut sizes);
    let headings: Vec<usize> = doc
        .blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| b.font_size >= threshold)
        .map(|(i, _)| i)
        .collect();

    let mut chapters = Vec::new();
    let first_heading = headings.first().copied().unwrap_or(doc.blocks.len());
    if first_heading > 0 {
        chapters.push(Chapter {
            chapter_id: String::new(),
            title: "front-matter".to_string(),
            block_range: (0, first_heading),
            heading_block: None,
            section_kind: SectionKind::Other,
        });
    }
    for (k, &h) in headings.iter().enumerate() {
        let end = headings.get(k + 1).copied().unwrap_or(doc.blocks.len());
        chapters.push(Chapter {
            chapter_id: String::new(),
            title: collapse_whitespace(&doc.blocks[h].text),
            block_range: (h, end),
            heading_block: Some(h),
            section_kind: SectionKind::Other,
        });
    }
    for (i, c) in chapters.iter_mut().enumerate() {
        c.chapter_id = format!("ch{i:02}");
    }
    chapters
}

/// Ordered keyword table; the first kind with a matching keyword wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordMap {
    pub entries: Vec<(SectionKind, Vec<String>)>,
}

impl Default for KeywordMap {
    fn default() -> Self {
        let kw = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        KeywordMap {
            entries: vec![
                (
                    SectionKind::Syntax,
                    kw(&["syntax", "word order", "clause", "sentence structure", "questions", "negation"]),
                ),
                (
                    SectionKind::Morphology,
                    kw(&[
                        "morpholog", "inflection", "declension", "conjugation", "verb", "noun",
                        "article", "adjective", "pronoun", "plural", "case", "tense",
                    ]),
                ),
                (
                    SectionKind::Lexicon,
                    kw(&["lexicon", "vocabulary", "glossary", "dictionary", "word list"]),
                ),
                (
                    SectionKind::Phonology,
                    kw(&["phonolog", "pronunciation", "spelling", "orthograph", "sounds"]),
                ),
            ],
        }
    }
}

impl KeywordMap {
    pub fn classify(&self, title: &str) -> SectionKind {
        let lower = title.to_lowercase();
        self.entries
            .iter()
            .find(|(_, kws)| kws.iter().any(|k| lower.contains(&k.to_lowercase())))
            .map(|(kind, _)| *kind)
            .unwrap_or(SectionKind::Other)
    }
}

pub fn classify_sections(chapters: &[Chapter], keywords: &KeywordMap) -> Vec<Chapter> {
    chapters
        .iter()
        .map(|c| Chapter {
            section_kind: if c.heading_block.is_some() {
                keywords.classify(&c.title)
            } else {
                SectionKind::Other
            },
            ..c.clone()
        })
        .collect()
}

/// Chapters that feed grammar-point extraction: syntax and morphology,
/// plus lexicon when `include_lexicon` is set.
pub fn grammar_sections(
    chapters: &[Chapter],
    include_lexicon: bool,
) -> Result<Vec<Chapter>, InspectorError> {
    let keep: Vec<Chapter> = chapters
        .iter()
        .filter(|c| match c.section_kind {
            SectionKind::Syntax | SectionKind::Morphology => true,
            SectionKind::Lexicon => include_lexicon,
            _ => false,
        })
        .cloned()
        .collect();
    if keep.is_empty() {
        return Err(InspectorError::NoGrammarSections {
            titles: chapters.iter().map(|c| c.title.clone()).collect(),
        });
    }
    Ok(keep)
}
