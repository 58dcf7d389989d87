//! Scoring of line-aligned text files outside any run directory.

use anyhow::{bail, Context, Result};
use gramprobe::jsonl::write_jsonl;
use gramprobe::llm::LlmClient;
use gramprobe::metrics::{
    judge_corpus, read_external_scores, score_corpus, BleuTokenizer, Direction, Hypothesis,
    JudgeConfig, MetricKind, ScoreRequest, Segment, SubwordVocab,
};
use gramprobe::template::PromptSet;
use std::path::{Path, PathBuf};

pub struct FileScoring {
    pub hyp: PathBuf,
    pub reference: PathBuf,
    pub src: Option<PathBuf>,
    pub external: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub metrics: Vec<MetricKind>,
    pub judge_model: String,
    pub direction: Direction,
    pub model_id: String,
    pub out: PathBuf,
}

fn lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::to_string).collect())
}

/// Segment ids are 1-based line numbers, `seg-000001` and so on.
pub fn segment_id(line: usize) -> String {
    format!("seg-{:06}", line + 1)
}

pub fn run(job: &FileScoring, client: Option<&LlmClient>, prompts: &PromptSet) -> Result<()> {
    let hyps = lines(&job.hyp)?;
    let refs = lines(&job.reference)?;
    let srcs = match &job.src {
        Some(p) => lines(p)?,
        None => vec![String::new(); refs.len()],
    };
    if hyps.len() != refs.len() || srcs.len() != refs.len() {
        bail!(
            "line counts differ: {} hypotheses, {} references, {} sources",
            hyps.len(),
            refs.len(),
            srcs.len()
        );
    }
    let segments: Vec<Segment> = refs
        .iter()
        .zip(&srcs)
        .enumerate()
        .map(|(i, (r, s))| Segment {
            segment_id: segment_id(i),
            source: s.clone(),
            reference: r.clone(),
        })
        .collect();
    let hypotheses: Vec<Hypothesis> = hyps
        .iter()
        .enumerate()
        .map(|(i, h)| Hypothesis {
            segment_id: segment_id(i),
            hypothesis: h.clone(),
        })
        .collect();

    let mut req = ScoreRequest::new(job.metrics.iter().copied());
    if let Some(v) = &job.vocab {
        req.tokenizer = BleuTokenizer::Subword(SubwordVocab::load(v)?);
    }
    if req.metrics.contains(&MetricKind::Judge) {
        if job.src.is_none() {
            bail!("the judge metric needs --src");
        }
        let client = client.context("the judge metric needs a provider")?;
        let cfg = JudgeConfig::new(&job.judge_model, job.direction);
        req.judge = Some(judge_corpus(&segments, &hypotheses, client, prompts, &cfg)?);
    }
    if req.metrics.contains(&MetricKind::External) {
        let path = job.external.as_ref().context("the external metric needs --external")?;
        req.external = Some(
            read_external_scores(path)?.with_context(|| format!("{} does not exist", path.display()))?,
        );
    }
    let scores = score_corpus::<f64>(&segments, &hypotheses, &req)?;
    write_jsonl(&job.out, &scores.to_rows(&job.model_id))?;
    for (metric, a) in &scores.aggregates {
        println!("{}\t{:.6}\t{:.6}\t{}", metric.name(), a.mean, a.std, a.n);
    }
    Ok(())
}
