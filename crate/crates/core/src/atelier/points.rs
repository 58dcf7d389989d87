use crate::hashing::{collapse_whitespace, short_id};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Where a grammar point was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Window { chapter_id: String, window_id: String },
    Row { table_id: String, row_index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrammarPoint {
    pub gp_id: String,
    pub description: String,
    pub sources: Vec<Provenance>,
    #[serde(default)]
    pub tags: Vec<String>,
}

/// Lowercased, whitespace-collapsed description used for identity.
pub fn normalize_description(d: &str) -> String {
    collapse_whitespace(d).to_lowercase()
}

pub fn gp_id_for(description: &str) -> String {
    short_id("gp", &[&normalize_description(description)])
}

impl GrammarPoint {
    pub fn new(description: &str, source: Provenance, tags: Vec<String>) -> Self {
        let description = collapse_whitespace(description);
        GrammarPoint {
            gp_id: gp_id_for(&description),
            description,
            sources: vec![source],
            tags,
        }
    }

    pub fn id_is_canonical(&self) -> bool {
        self.gp_id == gp_id_for(&self.description)
    }
}

fn token_set(s: &str) -> BTreeSet<String> {
    s.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Token-set Jaccard similarity of two descriptions. Two token-less
/// strings count as identical.
pub fn jaccard(a: &str, b: &str) -> f64 {
    let (ta, tb) = (token_set(a), token_set(b));
    let union = ta.union(&tb).count();
    if union == 0 {
        return 1.0;
    }
    ta.intersection(&tb).count() as f64 / union as f64
}

pub const DEFAULT_DEDUP_THRESHOLD: f64 = 0.7;

/// Greedy first-wins clustering: each point merges into the first earlier
/// survivor whose description has Jaccard similarity >= `threshold`,
/// contributing its provenance and tags.
pub fn dedupe_points(points: &[GrammarPoint], threshold: f64) -> Vec<GrammarPoint> {
    let mut survivors: Vec<(GrammarPoint, BTreeSet<String>)> = Vec::new();
    for p in points {
        let tokens = token_set(&p.description);
        let hit = survivors.iter_mut().find(|(s, st)| {
            s.gp_id == p.gp_id || {
                let union = st.union(&tokens).count();
                let sim = if union == 0 {
                    1.0
                } else {
                    st.intersection(&tokens).count() as f64 / union as f64
                };
                sim >= threshold
            }
        });
        match hit {
            Some((s, _)) => {
                for src in &p.sources {
                    if !s.sources.contains(src) {
                        s.sources.push(src.clone());
                    }
                }
                for t in &p.tags {
                    if !s.tags.contains(t) {
                        s.tags.push(t.clone());
                    }
                }
            }
            None => survivors.push((p.clone(), tokens)),
        }
    }
    survivors.into_iter().map(|(p, _)| p).collect()
}
