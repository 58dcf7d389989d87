use super::{
    bleu, chrf_pp, word_tokens, BleuParams, ChrfParams, Hypothesis, JudgeScore, MetricError,
    MetricKind, MetricScore, Segment, SubwordVocab,
};
use crate::num::{mean, population_std, Scalar};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

/// Tokenization applied before BLEU.
#[derive(Debug, Clone, Default)]
pub enum BleuTokenizer {
    /// Whitespace words with punctuation split off.
    #[default]
    Words,
    Subword(SubwordVocab),
}

impl BleuTokenizer {
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        match self {
            BleuTokenizer::Words => word_tokens(text),
            BleuTokenizer::Subword(v) => v.tokenize(text),
        }
    }
}

/// One line of a scorer-bridge output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalScore {
    pub segment_id: String,
    pub score: f64,
}

/// One line of a scorer-bridge input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgeRecord {
    pub segment_id: String,
    pub source: String,
    pub hypothesis: String,
    pub reference: String,
}

/// Bridge input for aligned segments and hypotheses.
pub fn bridge_records(
    segments: &[Segment],
    hypotheses: &[Hypothesis],
) -> Result<Vec<BridgeRecord>, MetricError> {
    check_alignment(segments, hypotheses)?;
    Ok(segments
        .iter()
        .zip(hypotheses)
        .map(|(s, h)| BridgeRecord {
            segment_id: s.segment_id.clone(),
            source: s.source.clone(),
            hypothesis: h.hypothesis.clone(),
            reference: s.reference.clone(),
        })
        .collect())
}

/// Read an external score file. `Ok(None)` when the file does not exist.
pub fn read_external_scores(path: &Path) -> Result<Option<Vec<ExternalScore>>, MetricError> {
    if !path.exists() {
        return Ok(None);
    }
    let rows: Vec<ExternalScore> =
        crate::jsonl::read_jsonl(path).map_err(|e| MetricError::Io(e.to_string()))?;
    for r in &rows {
        if !(0.0..=1.0).contains(&r.score) {
            return Err(MetricError::Io(format!(
                "{}: segment {} has score {} outside [0, 1]",
                path.display(),
                r.segment_id,
                r.score
            )));
        }
    }
    Ok(Some(rows))
}

#[derive(Debug, Clone, Default)]
pub struct ScoreRequest {
    pub metrics: BTreeSet<MetricKind>,
    pub chrf: ChrfParams,
    pub bleu: BleuParams,
    pub tokenizer: BleuTokenizer,
    /// Required when `judge` is requested.
    pub judge: Option<Vec<JudgeScore>>,
    /// Required when `external` is requested.
    pub external: Option<Vec<ExternalScore>>,
}

impl ScoreRequest {
    pub fn new(metrics: impl IntoIterator<Item = MetricKind>) -> Self {
        ScoreRequest {
            metrics: metrics.into_iter().collect(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate<T> {
    pub mean: T,
    /// Population standard deviation over segments.
    pub std: T,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScores<T> {
    /// Segment-major, metric-minor order.
    pub rows: Vec<MetricScore<T>>,
    pub aggregates: BTreeMap<MetricKind, Aggregate<T>>,
}

/// Persisted per-segment score line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub model_id: String,
    pub segment_id: String,
    pub metric: MetricKind,
    pub value: f64,
}

impl<T: Scalar> CorpusScores<T> {
    pub fn to_rows(&self, model_id: &str) -> Vec<ScoreRow> {
        self.rows
            .iter()
            .map(|r| ScoreRow {
                model_id: model_id.to_string(),
                segment_id: r.segment_id.clone(),
                metric: r.metric,
                value: r.value.to_f64().unwrap_or(f64::NAN),
            })
            .collect()
    }
}

pub(crate) fn check_alignment(
    segments: &[Segment],
    hypotheses: &[Hypothesis],
) -> Result<(), MetricError> {
    if segments.len() != hypotheses.len() {
        return Err(MetricError::AlignmentMismatch(format!(
            "{} references vs {} hypotheses",
            segments.len(),
            hypotheses.len()
        )));
    }
    let mut seen = BTreeSet::new();
    for (i, (s, h)) in segments.iter().zip(hypotheses).enumerate() {
        if s.segment_id != h.segment_id {
            return Err(MetricError::AlignmentMismatch(format!(
                "line {}: reference {} vs hypothesis {}",
                i + 1,
                s.segment_id,
                h.segment_id
            )));
        }
        if !seen.insert(s.segment_id.as_str()) {
            return Err(MetricError::AlignmentMismatch(format!(
                "duplicate segment {}",
                s.segment_id
            )));
        }
    }
    Ok(())
}

fn keyed<'a, V>(
    what: &str,
    segments: &[Segment],
    items: Option<&'a [V]>,
    id: impl Fn(&V) -> &str,
) -> Result<HashMap<String, &'a V>, MetricError> {
    let items = items.ok_or_else(|| {
        MetricError::AlignmentMismatch(format!("{what} scores requested but none supplied"))
    })?;
    let mut map = HashMap::new();
    for it in items {
        if map.insert(id(it).to_string(), it).is_some() {
            return Err(MetricError::AlignmentMismatch(format!(
                "duplicate {what} score for {}",
                id(it)
            )));
        }
    }
    if let Some(s) = segments.iter().find(|s| !map.contains_key(&s.segment_id)) {
        return Err(MetricError::AlignmentMismatch(format!(
            "no {what} score for segment {}",
            s.segment_id
        )));
    }
    if map.len() != segments.len() {
        return Err(MetricError::AlignmentMismatch(format!(
            "{what} scores name segments absent from the corpus"
        )));
    }
    Ok(map)
}

/// Per-segment scores and corpus aggregates for the requested metrics.
pub fn score_corpus<T: Scalar>(
    segments: &[Segment],
    hypotheses: &[Hypothesis],
    req: &ScoreRequest,
) -> Result<CorpusScores<T>, MetricError> {
    check_alignment(segments, hypotheses)?;
    let judge = if req.metrics.contains(&MetricKind::Judge) {
        Some(keyed("judge", segments, req.judge.as_deref(), |j: &JudgeScore| &j.segment_id)?)
    } else {
        None
    };
    let external = if req.metrics.contains(&MetricKind::External) {
        Some(keyed("external", segments, req.external.as_deref(), |e: &ExternalScore| &e.segment_id)?)
    } else {
        None
    };

    let mut rows = Vec::new();
    let mut per_metric: BTreeMap<MetricKind, Vec<T>> = BTreeMap::new();
    for (seg, hyp) in segments.iter().zip(hypotheses) {
        for &metric in &req.metrics {
            let value = match metric {
                MetricKind::Chrfpp => chrf_pp::<T>(&hyp.hypothesis, &seg.reference, &req.chrf)?,
                MetricKind::Bleu => bleu::<T, String>(
                    &req.tokenizer.tokenize(&hyp.hypothesis),
                    &req.tokenizer.tokenize(&seg.reference),
                    &req.bleu,
                )?,
                MetricKind::Judge => {
                    T::from_f64_lossy(judge.as_ref().expect("judge map")[&seg.segment_id].value)
                }
                MetricKind::External => {
                    T::from_f64_lossy(external.as_ref().expect("external map")[&seg.segment_id].score)
                }
            };
            per_metric.entry(metric).or_default().push(value);
            rows.push(MetricScore {
                metric,
                value,
                segment_id: seg.segment_id.clone(),
            });
        }
    }
    let aggregates = per_metric
        .into_iter()
        .filter_map(|(k, vs)| {
            Some((
                k,
                Aggregate {
                    mean: mean(&vs)?,
                    std: population_std(&vs)?,
                    n: vs.len(),
                },
            ))
        })
        .collect();
    Ok(CorpusScores { rows, aggregates })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(pairs: &[(&str, &str)]) -> (Vec<Segment>, Vec<Hypothesis>) {
        let segs = pairs
            .iter()
            .enumerate()
            .map(|(i, (_, r))| Segment {
                segment_id: format!("s{i}"),
                source: String::new(),
                reference: r.to_string(),
            })
            .collect();
        let hyps = pairs
            .iter()
            .enumerate()
            .map(|(i, (h, _))| Hypothesis {
                segment_id: format!("s{i}"),
                hypothesis: h.to_string(),
            })
            .collect();
        (segs, hyps)
    }

    #[test]
    fn identical_corpus() {
        let (s, h) = corpus(&[("Moien", "Moien"), ("Gudde Moien Welt", "Gudde Moien Welt")]);
        let out = score_corpus::<f64>(&s, &h, &ScoreRequest::new([MetricKind::Chrfpp, MetricKind::Bleu])).unwrap();
        let a = out.aggregates[&MetricKind::Chrfpp];
        assert_eq!((a.mean, a.std, a.n), (100.0, 0.0, 2));
        assert_eq!(out.aggregates[&MetricKind::Bleu].mean, 100.0);
        assert_eq!(out.rows.len(), 4);
        assert!(out.rows.iter().all(|r| r.in_scale()));
    }

    #[test]
    fn misaligned() {
        let (s, mut h) = corpus(&[("a", "a"), ("b", "b")]);
        h.swap(0, 1);
        assert!(matches!(
            score_corpus::<f64>(&s, &h, &ScoreRequest::new([MetricKind::Chrfpp])),
            Err(MetricError::AlignmentMismatch(_))
        ));
        assert!(matches!(
            score_corpus::<f64>(&s, &h[..1], &ScoreRequest::new([MetricKind::Chrfpp])),
            Err(MetricError::AlignmentMismatch(_))
        ));
    }

    #[test]
    fn external_required_when_requested() {
        let (s, h) = corpus(&[("a", "a")]);
        assert!(matches!(
            score_corpus::<f64>(&s, &h, &ScoreRequest::new([MetricKind::External])),
            Err(MetricError::AlignmentMismatch(_))
        ));
        let mut req = ScoreRequest::new([MetricKind::External]);
        req.external = Some(vec![ExternalScore { segment_id: "s0".into(), score: 0.8 }]);
        let out = score_corpus::<f64>(&s, &h, &req).unwrap();
        assert_eq!(out.aggregates[&MetricKind::External].mean, 0.8);
        req.external = Some(vec![ExternalScore { segment_id: "zz".into(), score: 0.8 }]);
        assert!(score_corpus::<f64>(&s, &h, &req).is_err());
    }

    #[test]
    fn external_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ext.jsonl");
        assert_eq!(read_external_scores(&p).unwrap(), None);
        std::fs::write(&p, "{\"segment_id\":\"s0\",\"score\":0.5}\n").unwrap();
        assert_eq!(read_external_scores(&p).unwrap().unwrap()[0].score, 0.5);
        std::fs::write(&p, "{\"segment_id\":\"s0\",\"score\":1.5}\n").unwrap();
        assert!(read_external_scores(&p).is_err());
    }
}
