use super::sentences::SentenceSplitter;
use crate::inspector::{Chapter, DocTable, SourceDocument};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextWindow {
    pub window_id: String,
    pub chapter_id: String,
    pub chapter_title: String,
    pub sentences: Vec<String>,
    /// Inclusive sentence index span within the chapter.
    pub span: (usize, usize),
}

impl TextWindow {
    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }
}

/// Body sentences of a chapter, in reading order. Block boundaries are
/// always sentence boundaries.
pub fn chapter_sentences(
    chapter: &Chapter,
    doc: &SourceDocument,
    splitter: &SentenceSplitter,
) -> Vec<String> {
    chapter
        .body_blocks()
        .flat_map(|i| splitter.split(&doc.blocks[i].text))
        .collect()
}

/// Number of windows of size `window` and step `stride` over `n` sentences.
pub fn window_count(n: usize, window: usize, stride: usize) -> usize {
    if n == 0 {
        return 0;
    }
    n.saturating_sub(window).div_ceil(stride) + 1
}

/// Overlapping sentence windows over one chapter. Every sentence lands in
/// at least one window; only the last window may be shorter than `window`.
///
/// Panics if `window == 0` or `stride` is outside `1..=window`.
pub fn slide_windows(
    chapter: &Chapter,
    sentences: &[String],
    window: usize,
    stride: usize,
) -> Vec<TextWindow> {
    assert!(window >= 1, "window must be >= 1");
    assert!((1..=window).contains(&stride), "stride must be in 1..=window");
    let n = sentences.len();
    (0..window_count(n, window, stride))
        .map(|k| {
            let start = k * stride;
            let end = (start + window).min(n);
            TextWindow {
                window_id: format!("{}-w{k:03}", chapter.chapter_id),
                chapter_id: chapter.chapter_id.clone(),
                chapter_title: chapter.title.clone(),
                sentences: sentences[start..end].to_vec(),
                span: (start, end - 1),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowContext {
    pub table_id: String,
    pub row_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header: Option<Vec<String>>,
    pub row_cells: Vec<String>,
    pub context_before: String,
    pub context_after: String,
}

impl RowContext {
    pub fn unit_id(&self) -> String {
        format!("{}-r{:03}", self.table_id, self.row_index)
    }
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Longest run of sentences taken from the end (`from_end`) or start that
/// fits in `budget` characters when joined with single spaces.
fn fit_sentences(sentences: &[String], budget: usize, from_end: bool) -> String {
    let mut taken: Vec<&str> = Vec::new();
    let mut used = 0usize;
    let iter: Box<dyn Iterator<Item = &String>> = if from_end {
        Box::new(sentences.iter().rev())
    } else {
        Box::new(sentences.iter())
    };
    for s in iter {
        let extra = char_len(s) + usize::from(!taken.is_empty());
        if used + extra > budget {
            break;
        }
        used += extra;
        taken.push(s);
    }
    if from_end {
        taken.reverse();
    }
    taken.join(" ")
}

/// One context per table row. The text before the table is the blocks
/// preceding the anchor block; the text after starts at the anchor block.
/// Both sides are cut at sentence boundaries to at most `budget` chars.
pub fn row_contexts(
    table: &DocTable,
    doc: &SourceDocument,
    budget: usize,
    splitter: &SentenceSplitter,
) -> Vec<RowContext> {
    let anchor = table.anchor_block.min(doc.blocks.len());
    let before: Vec<String> = doc.blocks[..anchor]
        .iter()
        .flat_map(|b| splitter.split(&b.text))
        .collect();
    let after: Vec<String> = doc.blocks[anchor..]
        .iter()
        .flat_map(|b| splitter.split(&b.text))
        .collect();
    let context_before = fit_sentences(&before, budget, true);
    let context_after = fit_sentences(&after, budget, false);
    table
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| RowContext {
            table_id: table.table_id.clone(),
            row_index: i,
            header: table.header.clone(),
            row_cells: row.clone(),
            context_before: context_before.clone(),
            context_after: context_after.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inspector::{SectionKind, TextBlock};
    use std::collections::BTreeMap;

    fn chapter() -> Chapter {
        Chapter {
            chapter_id: "ch01".into(),
            title: "Syntax".into(),
            block_range: (0, 1),
            heading_block: None,
            section_kind: SectionKind::Syntax,
        }
    }

    fn sents(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("S{i}.")).collect()
    }

    #[test]
    fn short_chapter_clamps() {
        let w = slide_windows(&chapter(), &sents(1), 3, 1);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].sentences.len(), 1);
        assert_eq!(w[0].span, (0, 0));
    }

    #[test]
    fn ten_sentences_window_four_stride_two() {
        let w = slide_windows(&chapter(), &sents(10), 4, 2);
        let spans: Vec<_> = w.iter().map(|w| w.span).collect();
        assert_eq!(spans, vec![(0, 3), (2, 5), (4, 7), (6, 9)]);
        assert_eq!(w[3].window_id, "ch01-w003");
    }

    #[test]
    fn stride_equal_window_partitions() {
        let w = slide_windows(&chapter(), &sents(9), 3, 3);
        let all: Vec<String> = w.iter().flat_map(|w| w.sentences.clone()).collect();
        assert_eq!(all, sents(9));
    }

    #[test]
    fn empty_chapter_has_no_windows() {
        assert!(slide_windows(&chapter(), &[], 5, 3).is_empty());
    }

    fn doc() -> SourceDocument {
        let texts = ["Alpha one. Alpha two.", "Beta one.", "Gamma one. Gamma two."];
        SourceDocument {
            doc_id: "d".into(),
            metadata: BTreeMap::new(),
            blocks: texts
                .iter()
                .enumerate()
                .map(|(i, t)| TextBlock {
                    page: 0,
                    font_size: 10.0,
                    text: t.to_string(),
                    block_index: i,
                })
                .collect(),
            tables: vec![],
        }
    }

    fn table(anchor: usize) -> DocTable {
        DocTable {
            table_id: "t1".into(),
            anchor_block: anchor,
            header: Some(vec!["case".into(), "form".into()]),
            rows: vec![
                vec!["nom".into(), "de".into()],
                vec!["acc".into(), "den".into()],
                vec!["dat".into(), "dem".into()],
            ],
        }
    }

    #[test]
    fn rows_share_contexts() {
        let ctx = row_contexts(&table(2), &doc(), 400, &SentenceSplitter::default());
        assert_eq!(ctx.len(), 3);
        assert!(ctx.iter().all(|c| c.context_before == ctx[0].context_before
            && c.context_after == ctx[0].context_after));
        assert_eq!(ctx[0].context_before, "Alpha one. Alpha two. Beta one.");
        assert_eq!(ctx[0].context_after, "Gamma one. Gamma two.");
        assert_eq!(ctx[1].row_cells, vec!["acc", "den"]);
    }

    #[test]
    fn budget_cuts_at_sentence_boundaries() {
        let ctx = row_contexts(&table(2), &doc(), 15, &SentenceSplitter::default());
        assert_eq!(ctx[0].context_before, "Beta one.");
        assert_eq!(ctx[0].context_after, "Gamma one.");
        let zero = row_contexts(&table(2), &doc(), 0, &SentenceSplitter::default());
        assert_eq!(zero.len(), 3);
        assert!(zero.iter().all(|c| c.context_before.is_empty() && c.context_after.is_empty()));
    }

    #[test]
    fn anchor_at_start_has_empty_before() {
        let ctx = row_contexts(&table(0), &doc(), 400, &SentenceSplitter::default());
        assert_eq!(ctx[0].context_before, "");
        assert!(!ctx[0].context_after.is_empty());
    }
}
