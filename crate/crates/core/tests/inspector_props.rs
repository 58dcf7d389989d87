use gramprobe::inspector::{
    classify_sections, grammar_sections, parse_interchange, segment_chapters, DocTable, KeywordMap,
    SectionKind, SourceDocument, TextBlock,
};
use proptest::prelude::*;
use std::collections::BTreeMap;
use std::path::Path;

fn document() -> impl Strategy<Value = SourceDocument> {
    let block = (0u32..20, prop_oneof![Just(10.0), Just(11.0), Just(14.0), Just(18.0), Just(24.0)], "[A-Za-z]{1,8}( [a-z]{1,8}){0,5}");
    proptest::collection::vec(block, 1..40).prop_flat_map(|blocks| {
        let n = blocks.len();
        let table = (0..n, 1usize..4, 1usize..4).prop_map(|(anchor, arity, rows)| (anchor, arity, rows));
        (Just(blocks), proptest::collection::vec(table, 0..3))
    })
    .prop_map(|(blocks, tables)| SourceDocument {
        doc_id: "gen".into(),
        metadata: [("title".to_string(), "Generated".to_string())].into_iter().collect(),
        blocks: blocks
            .into_iter()
            .enumerate()
            .map(|(i, (page, font_size, text))| TextBlock { page, font_size, text, block_index: i })
            .collect(),
        tables: tables
            .into_iter()
            .enumerate()
            .map(|(t, (anchor, arity, rows))| DocTable {
                table_id: format!("t{t}"),
                anchor_block: anchor,
                header: None,
                rows: (0..rows).map(|r| (0..arity).map(|c| format!("r{r}c{c}")).collect()).collect(),
            })
            .collect(),
    })
}

proptest! {
    #[test]
    fn chapters_partition_blocks(doc in document(), ratio in 1.0f64..2.5) {
        let chapters = segment_chapters(&doc, ratio);
        let mut next = 0;
        for c in &chapters {
            prop_assert_eq!(c.block_range.0, next);
            prop_assert!(c.block_range.0 < c.block_range.1);
            next = c.block_range.1;
        }
        prop_assert_eq!(next, doc.blocks.len());
    }

    #[test]
    fn segmentation_idempotent(doc in document(), ratio in 1.0f64..2.5) {
        let once = segment_chapters(&doc, ratio);
        let again = SourceDocument::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(segment_chapters(&again, ratio), once);
    }

    #[test]
    fn higher_ratio_never_adds_chapters(doc in document(), a in 1.0f64..2.5, b in 1.0f64..2.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(segment_chapters(&doc, hi).len() <= segment_chapters(&doc, lo).len());
    }

    #[test]
    fn interchange_round_trip(doc in document()) {
        prop_assert_eq!(SourceDocument::from_json(&doc.to_json()).unwrap(), doc);
    }

    #[test]
    fn grammar_sections_keep_order(doc in document()) {
        let chapters = classify_sections(&segment_chapters(&doc, 1.25), &KeywordMap::default());
        if let Ok(kept) = grammar_sections(&chapters, false) {
            let ids: Vec<&str> = chapters
                .iter()
                .filter(|c| matches!(c.section_kind, SectionKind::Syntax | SectionKind::Morphology))
                .map(|c| c.chapter_id.as_str())
                .collect();
            prop_assert_eq!(kept.iter().map(|c| c.chapter_id.as_str()).collect::<Vec<_>>(), ids);
        }
    }
}

#[test]
fn mini_grammar_fixture() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mini_book.json");
    let doc = parse_interchange(&root).unwrap();
    assert_eq!((doc.blocks.len(), doc.tables.len()), (12, 2));
    let chapters = classify_sections(&segment_chapters(&doc, 1.25), &KeywordMap::default());
    let kinds: BTreeMap<&str, SectionKind> = chapters.iter().map(|c| (c.title.as_str(), c.section_kind)).collect();
    assert_eq!(kinds["Nouns and Articles"], SectionKind::Morphology);
    assert_eq!(kinds["Word Order and Clauses"], SectionKind::Syntax);
    assert_eq!(kinds["Pronunciation"], SectionKind::Phonology);
    assert_eq!(grammar_sections(&chapters, false).unwrap().len(), 2);
}
