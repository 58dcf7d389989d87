use super::{
    label, InstanceProvenance, ProofstandError, T2Mode, TaskConfig, TaskInstance, TaskKind,
};
use crate::atelier::{normalize_description, ExamplePair, GrammarPoint};
use crate::dataset::Dataset;
use crate::forge::MinimalPair;
use crate::hashing::short_id;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashSet};

/// Walks a pool in seeded random order, reshuffling after each pass.
struct Cycle<'a, T> {
    items: Vec<&'a T>,
    pos: usize,
}

impl<'a, T> Cycle<'a, T> {
    fn new(items: Vec<&'a T>, rng: &mut ChaCha8Rng) -> Self {
        let mut c = Cycle { items, pos: 0 };
        c.items.shuffle(rng);
        c
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> &'a T {
        if self.pos == self.items.len() {
            self.items.shuffle(rng);
            self.pos = 0;
        }
        self.pos += 1;
        self.items[self.pos - 1]
    }
}

/// One option: its text and the grammar point it traces to.
type Opt = (String, String);

fn insufficient(kind: TaskKind, what: &'static str, need: usize, have: usize) -> ProofstandError {
    ProofstandError::InsufficientPool {
        kind,
        what,
        need,
        have,
    }
}

fn pick<'a, T>(
    pool: &[&'a T],
    k: usize,
    rng: &mut ChaCha8Rng,
    kind: TaskKind,
    what: &'static str,
) -> Result<Vec<&'a T>, ProofstandError> {
    if pool.len() < k {
        return Err(insufficient(kind, what, k, pool.len()));
    }
    Ok(pool.choose_multiple(rng, k).copied().collect())
}

/// Shuffle the options and assemble an instance whose key is the set of
/// options flagged `true`.
#[allow(clippy::too_many_arguments)]
fn assemble(
    cfg: &TaskConfig,
    index: usize,
    stem: String,
    secondary: Option<String>,
    mut options: Vec<(Opt, bool)>,
    shuffle: bool,
    stem_gp_ids: Vec<String>,
    source_ids: Vec<String>,
    rng: &mut ChaCha8Rng,
) -> TaskInstance {
    if shuffle {
        options.shuffle(rng);
    }
    let texts: Vec<&str> = options.iter().map(|((t, _), _)| t.as_str()).collect();
    debug_assert_eq!(texts.iter().collect::<HashSet<_>>().len(), texts.len(), "candidates distinct");
    let mut id_parts = vec![cfg.seed.to_string(), index.to_string(), stem.clone()];
    id_parts.extend(texts.iter().map(|t| t.to_string()));
    let refs: Vec<&str> = id_parts.iter().map(String::as_str).collect();
    TaskInstance {
        instance_id: short_id(&cfg.kind.name(), &refs),
        kind: cfg.kind,
        mode: cfg.t2_mode,
        stem,
        secondary,
        key: options
            .iter()
            .enumerate()
            .filter(|(_, (_, k))| *k)
            .map(|(i, _)| label(i))
            .collect(),
        provenance: InstanceProvenance {
            stem_gp_ids,
            source_ids,
            option_gp_ids: options.iter().map(|((_, g), _)| g.clone()).filter(|g| !g.is_empty()).collect(),
        },
        candidates: options.into_iter().map(|((t, _), _)| t).collect(),
    }
}

fn rng_for(cfg: &TaskConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

fn unique_points(ds: &Dataset) -> Vec<&GrammarPoint> {
    let mut seen = HashSet::new();
    ds.points
        .iter()
        .filter(|g| seen.insert(normalize_description(&g.description)))
        .collect()
}

/// Verified pairs whose grammar points all exist, grouped by first point.
fn pairs_by_point<'a>(ds: &'a Dataset, known: &HashSet<&str>) -> BTreeMap<&'a str, Vec<&'a ExamplePair>> {
    let mut m: BTreeMap<&str, Vec<&ExamplePair>> = BTreeMap::new();
    for p in ds.verified_pairs() {
        if !p.gp_ids.is_empty() && p.gp_ids.iter().all(|g| known.contains(g.as_str())) {
            m.entry(p.gp_ids[0].as_str()).or_default().push(p);
        }
    }
    m
}

/// Task 1: a sentence and its English equivalent; pick the description
/// it instantiates among `n_grammars`.
pub fn build_task1(ds: &Dataset, cfg: &TaskConfig) -> Result<Vec<TaskInstance>, ProofstandError> {
    cfg.validate()?;
    let kind = TaskKind::T1;
    let points = unique_points(ds);
    let known: HashSet<&str> = points.iter().map(|g| g.gp_id.as_str()).collect();
    let index: BTreeMap<&str, &GrammarPoint> = points.iter().map(|g| (g.gp_id.as_str(), *g)).collect();
    let pairs: Vec<&ExamplePair> = pairs_by_point(ds, &known).into_values().flatten().collect();
    if pairs.is_empty() {
        return Err(insufficient(kind, "verified pairs", 1, 0));
    }
    if points.len() < cfg.n_grammars {
        return Err(insufficient(kind, "grammar points", cfg.n_grammars, points.len()));
    }
    let mut rng = rng_for(cfg);
    let mut stems = Cycle::new(pairs, &mut rng);
    let mut out = Vec::with_capacity(cfg.instances);
    for i in 0..cfg.instances {
        let pair = stems.next(&mut rng);
        let truth = index[pair.gp_ids[0].as_str()];
        let eligible: Vec<&GrammarPoint> = points
            .iter()
            .copied()
            .filter(|g| !pair.gp_ids.contains(&g.gp_id))
            .collect();
        let distractors = pick(&eligible, cfg.n_grammars - 1, &mut rng, kind, "distractor points")?;
        let mut options = vec![((truth.description.clone(), truth.gp_id.clone()), true)];
        options.extend(distractors.iter().map(|g| ((g.description.clone(), g.gp_id.clone()), false)));
        out.push(assemble(
            cfg,
            i,
            pair.luxembourgish.clone(),
            Some(pair.english.clone()),
            options,
            true,
            pair.gp_ids.clone(),
            vec![pair.pair_id.clone()],
            &mut rng,
        ));
    }
    Ok(out)
}

/// Distinct Luxembourgish sentences of verified pairs, first occurrence wins.
fn distinct_sentences<'a>(by_point: &BTreeMap<&'a str, Vec<&'a ExamplePair>>) -> Vec<&'a ExamplePair> {
    let mut seen = HashSet::new();
    by_point
        .values()
        .flatten()
        .copied()
        .filter(|p| seen.insert(p.luxembourgish.as_str()))
        .collect()
}

/// Task 2: a grammar description; pick the sentence demonstrating it among
/// `n_sentences` distractors, or in judge mode say whether one sentence
/// demonstrates it.
pub fn build_task2(ds: &Dataset, cfg: &TaskConfig) -> Result<Vec<TaskInstance>, ProofstandError> {
    cfg.validate()?;
    let kind = TaskKind::T2;
    let points = unique_points(ds);
    let known: HashSet<&str> = points.iter().map(|g| g.gp_id.as_str()).collect();
    let by_point = pairs_by_point(ds, &known);
    if by_point.is_empty() {
        return Err(insufficient(kind, "verified pairs", 1, 0));
    }
    let sentences = distinct_sentences(&by_point);
    let stem_points: Vec<&GrammarPoint> = points
        .iter()
        .copied()
        .filter(|g| by_point.contains_key(g.gp_id.as_str()))
        .collect();
    let mut rng = rng_for(cfg);
    let mut stems = Cycle::new(stem_points, &mut rng);
    let mut out = Vec::with_capacity(cfg.instances);
    for i in 0..cfg.instances {
        let gp = stems.next(&mut rng);
        let own = &by_point[gp.gp_id.as_str()];
        let matching = *own.choose(&mut rng).expect("non-empty");
        let eligible: Vec<&ExamplePair> = sentences
            .iter()
            .copied()
            .filter(|p| !p.gp_ids.contains(&gp.gp_id) && p.luxembourgish != matching.luxembourgish)
            .collect();
        let inst = match cfg.t2_mode {
            T2Mode::Select => {
                let distractors = pick(&eligible, cfg.n_sentences, &mut rng, kind, "distractor sentences")?;
                let mut options = vec![((matching.luxembourgish.clone(), gp.gp_id.clone()), true)];
                options.extend(distractors.iter().map(|p| ((p.luxembourgish.clone(), p.gp_ids[0].clone()), false)));
                let mut sources = vec![matching.pair_id.clone()];
                sources.extend(distractors.iter().map(|p| p.pair_id.clone()));
                assemble(cfg, i, gp.description.clone(), None, options, true, vec![gp.gp_id.clone()], sources, &mut rng)
            }
            T2Mode::Judge => {
                let shown = if rng.gen_bool(0.5) {
                    matching
                } else {
                    pick(&eligible, 1, &mut rng, kind, "distractor sentences")?[0]
                };
                let yes = std::ptr::eq(shown, matching);
                let options = vec![
                    (("Yes".to_string(), String::new()), yes),
                    (("No".to_string(), String::new()), !yes),
                ];
                assemble(
                    cfg,
                    i,
                    gp.description.clone(),
                    Some(shown.luxembourgish.clone()),
                    options,
                    false,
                    vec![gp.gp_id.clone()],
                    vec![shown.pair_id.clone()],
                    &mut rng,
                )
            }
        };
        out.push(inst);
    }
    Ok(out)
}

/// Join sentences into one paragraph, adding a period where a sentence
/// lacks final punctuation.
fn paragraph(sentences: &[&str]) -> String {
    sentences
        .iter()
        .map(|s| {
            let s = s.trim();
            if s.ends_with(['.', '!', '?']) {
                s.to_string()
            } else {
                format!("{s}.")
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Task 3: a paragraph of `n_sentences` sentences with distinct grammar
/// points; pick those points among `n_grammars` descriptions.
pub fn build_task3(ds: &Dataset, cfg: &TaskConfig) -> Result<Vec<TaskInstance>, ProofstandError> {
    cfg.validate()?;
    let kind = TaskKind::T3;
    let points = unique_points(ds);
    let known: HashSet<&str> = points.iter().map(|g| g.gp_id.as_str()).collect();
    let by_point = pairs_by_point(ds, &known);
    let with_pairs: Vec<&GrammarPoint> = points
        .iter()
        .copied()
        .filter(|g| by_point.contains_key(g.gp_id.as_str()))
        .collect();
    if with_pairs.len() < cfg.n_sentences {
        return Err(insufficient(kind, "points with verified pairs", cfg.n_sentences, with_pairs.len()));
    }
    if points.len() < cfg.n_grammars {
        return Err(insufficient(kind, "grammar points", cfg.n_grammars, points.len()));
    }
    let mut rng = rng_for(cfg);
    let mut out = Vec::with_capacity(cfg.instances);
    for i in 0..cfg.instances {
        let chosen = pick(&with_pairs, cfg.n_sentences, &mut rng, kind, "points with verified pairs")?;
        let pairs: Vec<&ExamplePair> = chosen
            .iter()
            .map(|g| *by_point[g.gp_id.as_str()].choose(&mut rng).expect("non-empty"))
            .collect();
        let covered: HashSet<&str> = pairs.iter().flat_map(|p| p.gp_ids.iter().map(String::as_str)).collect();
        let eligible: Vec<&GrammarPoint> = points
            .iter()
            .copied()
            .filter(|g| !covered.contains(g.gp_id.as_str()))
            .collect();
        let distractors = pick(&eligible, cfg.n_grammars - cfg.n_sentences, &mut rng, kind, "distractor points")?;
        let mut options: Vec<(Opt, bool)> = chosen
            .iter()
            .map(|g| ((g.description.clone(), g.gp_id.clone()), true))
            .collect();
        options.extend(distractors.iter().map(|g| ((g.description.clone(), g.gp_id.clone()), false)));
        let texts: Vec<&str> = pairs.iter().map(|p| p.luxembourgish.as_str()).collect();
        out.push(assemble(
            cfg,
            i,
            paragraph(&texts),
            None,
            options,
            true,
            chosen.iter().map(|g| g.gp_id.clone()).collect(),
            pairs.iter().map(|p| p.pair_id.clone()).collect(),
            &mut rng,
        ));
    }
    Ok(out)
}

/// Task 4: pick the grammatical sentence among a minimal pair, optionally
/// padded with ungrammatical sentences of other minimal pairs.
pub fn build_task4(ds: &Dataset, cfg: &TaskConfig) -> Result<Vec<TaskInstance>, ProofstandError> {
    cfg.validate()?;
    let kind = TaskKind::T4;
    if ds.minimal_pairs.is_empty() {
        return Err(insufficient(kind, "minimal pairs", 1, 0));
    }
    let index = ds.point_index();
    for mp in &ds.minimal_pairs {
        if !index.contains_key(mp.gp_id.as_str()) {
            return Err(ProofstandError::UnknownGrammarPoint {
                mp_id: mp.mp_id.clone(),
                gp_id: mp.gp_id.clone(),
            });
        }
    }
    let mut seen = HashSet::new();
    let fillers: Vec<&MinimalPair> = ds
        .minimal_pairs
        .iter()
        .filter(|m| seen.insert(m.incorrect.as_str()))
        .collect();
    let mut rng = rng_for(cfg);
    let mut stems = Cycle::new(ds.minimal_pairs.iter().collect(), &mut rng);
    let mut out = Vec::with_capacity(cfg.instances);
    for i in 0..cfg.instances {
        let mp = stems.next(&mut rng);
        assert_ne!(mp.correct, mp.incorrect, "minimal pair {} has no contrast", mp.mp_id);
        let mut options = vec![
            ((mp.correct.clone(), mp.gp_id.clone()), true),
            ((mp.incorrect.clone(), mp.gp_id.clone()), false),
        ];
        let mut sources = vec![mp.mp_id.clone()];
        if cfg.t4_options > 2 {
            let eligible: Vec<&MinimalPair> = fillers
                .iter()
                .copied()
                .filter(|m| m.gp_id != mp.gp_id && m.incorrect != mp.correct && m.incorrect != mp.incorrect)
                .collect();
            let extra = pick(&eligible, cfg.t4_options - 2, &mut rng, kind, "ungrammatical fillers")?;
            options.extend(extra.iter().map(|m| ((m.incorrect.clone(), m.gp_id.clone()), false)));
            sources.extend(extra.iter().map(|m| m.mp_id.clone()));
        }
        out.push(assemble(
            cfg,
            i,
            index[mp.gp_id.as_str()].description.clone(),
            None,
            options,
            true,
            vec![mp.gp_id.clone()],
            sources,
            &mut rng,
        ));
    }
    Ok(out)
}

pub fn build_tasks(ds: &Dataset, cfg: &TaskConfig) -> Result<Vec<TaskInstance>, ProofstandError> {
    match cfg.kind {
        TaskKind::T1 => build_task1(ds, cfg),
        TaskKind::T2 => build_task2(ds, cfg),
        TaskKind::T3 => build_task3(ds, cfg),
        TaskKind::T4 => build_task4(ds, cfg),
    }
}
