use crate::atelier::{ExamplePair, GrammarPoint, LengthBand, PairStatus, Provenance};
use crate::dataset::Dataset;
use crate::forge::{word_edit_distance, BackcheckVerdict, MinimalPair};
use crate::hashing::short_id;

/// A generated dataset of `points` grammar points, each with
/// `pairs_per_point` verified pairs and one minimal pair. Texts are
/// templated nonsense; only the record structure is realistic.
pub fn synthetic_dataset(points: usize, pairs_per_point: usize) -> Dataset {
    let mut ds = Dataset::default();
    for i in 0..points {
        let gp = GrammarPoint::new(
            &format!("Rule {i}: class {i} nouns take the ending -e{i} after the article."),
            Provenance::Row {
                table_id: "synthetic".into(),
                row_index: i,
            },
            vec!["morphology".into()],
        );
        for j in 0..pairs_per_point {
            let mut p = ExamplePair::new(
                &gp.gp_id,
                &format!("Example {j} shows class {i} nouns after the article."),
                &format!("Beispill {j} weist Klass {i} Nimm no dem Artikel."),
                LengthBand::default(),
            );
            ds.verdicts.push(BackcheckVerdict {
                pair_id: p.pair_id.clone(),
                instantiates_rule: true,
                translation_score: 8.0,
                judge_model: "synthetic".into(),
                rationale: String::new(),
            });
            p.transition(PairStatus::Verified).expect("fresh pair");
            if j == 0 {
                let correct = p.luxembourgish.clone();
                let incorrect = format!("Beispill {j} weist Klass {i} Nimmen no den Artikel.");
                ds.minimal_pairs.push(MinimalPair {
                    mp_id: short_id("mp", &[&gp.gp_id, &correct, &incorrect]),
                    gp_id: gp.gp_id.clone(),
                    pair_id: p.pair_id.clone(),
                    edit_distance: word_edit_distance(&correct, &incorrect),
                    correct,
                    incorrect,
                    edit_summary: "plural ending and article case changed".into(),
                });
            }
            ds.pairs.push(p);
        }
        ds.points.push(gp);
    }
    ds
}

pub const RETENTION_POINTS: usize = 25;
pub const RETENTION_PAIRS: usize = 100;
pub const RETENTION_FAILING: usize = 6;

/// 100 back-checked pairs over 25 points, of which 6 fail the rule check:
/// retention 94/100. Statuses follow the default filter policy.
pub fn retention_dataset() -> Dataset {
    let mut ds = Dataset::default();
    let per_point = RETENTION_PAIRS / RETENTION_POINTS;
    for i in 0..RETENTION_POINTS {
        let gp = GrammarPoint::new(
            &format!("Retention rule {i}: verbs of group {i} move to the clause end."),
            Provenance::Window {
                chapter_id: "ch01".into(),
                window_id: format!("ch01-w{i:03}"),
            },
            vec!["syntax".into()],
        );
        for j in 0..per_point {
            let mut p = ExamplePair::new(
                &gp.gp_id,
                &format!("Sentence {j} of group {i} places the verb at the very end of the clause."),
                &format!("Saz {j} vun der Grupp {i} setzt d'Verb un d'Enn vum Saz."),
                LengthBand::default(),
            );
            let passes = !(j == 0 && i < RETENTION_FAILING);
            ds.verdicts.push(BackcheckVerdict {
                pair_id: p.pair_id.clone(),
                instantiates_rule: passes,
                translation_score: if passes { 8.0 } else { 5.0 },
                judge_model: "fixture-judge".into(),
                rationale: if passes { "rule applied".into() } else { "verb not clause-final".into() },
            });
            p.transition(if passes { PairStatus::Verified } else { PairStatus::Rejected })
                .expect("fresh pair");
            ds.pairs.push(p);
        }
        ds.points.push(gp);
    }
    ds
}
