//! Recording and verification of the fixture pipeline.
//!
//! `record` runs the whole pipeline against the [`FixtureAuthor`] with a
//! transcript cache and stores the run directory as the golden tree.
//! `verify` replays the same pipeline from the cache alone and diffs every
//! output against the golden tree.

use super::author::{FixtureAuthor, FIXTURE_PROVIDER};
use super::synthetic::retention_dataset;
use crate::dataset::{MINIMAL_PAIRS_FILE, PAIRS_FILE, POINTS_FILE, VERDICTS_FILE};
use crate::jsonl::write_jsonl;
use crate::llm::{AnswerKeyChannel, LlmClient, TranscriptCache};
use crate::pipeline::{Pipeline, PipelineError, RunConfig, RunManifest, MANIFEST_FILE};
use crate::template::PromptSet;
use similar::TextDiff;
use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const CONFIG_FILE: &str = "fixture.toml";
pub const CACHE_DIR: &str = "cache";
pub const GOLDEN_DIR: &str = "golden";
pub const RETENTION_DIR: &str = "retention";

/// One file whose replayed content differs from the golden copy.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub stage: String,
    pub file: String,
    /// Unified diff, golden first.
    pub diff: String,
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("golden mismatch: {}", list(.0))]
    GoldenMismatch(Vec<Mismatch>),
    #[error("fixture set incomplete: {0}")]
    Missing(String),
    #[error("io: {0}")]
    Io(String),
}

fn list(ms: &[Mismatch]) -> String {
    ms.iter()
        .map(|m| format!("stage {} ({})", m.stage, m.file))
        .collect::<Vec<_>>()
        .join(", ")
}

impl FixtureError {
    pub fn kind(&self) -> &'static str {
        match self {
            FixtureError::Pipeline(e) => e.kind(),
            FixtureError::GoldenMismatch(_) => "GoldenMismatch",
            FixtureError::Missing(_) => "FixtureMissing",
            FixtureError::Io(_) => "Io",
        }
    }
}

fn io(path: &Path, e: std::io::Error) -> FixtureError {
    FixtureError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub run_dir: PathBuf,
    pub files: usize,
    pub cache_hits: u64,
    pub replay_misses: u64,
    pub upstream_calls: u64,
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} files match; cache hits {}, replay misses {}, upstream calls {}",
            self.files, self.cache_hits, self.replay_misses, self.upstream_calls
        )
    }
}

/// Stage whose requests are rendered from a template.
pub fn stage_for_template(name: &str) -> &'static str {
    match name {
        "extract_window" | "extract_row" | "repair" => "extract",
        "generate" => "generate",
        "backcheck" => "backcheck",
        "forge" => "pairs",
        "translate" => "translate",
        "judge" => "score",
        _ => "tasks-run",
    }
}

pub fn load_config(root: &Path) -> Result<RunConfig, FixtureError> {
    RunConfig::load(&root.join(CONFIG_FILE)).map_err(FixtureError::Missing)
}

/// Relative `/`-separated paths of all files under `dir`.
pub fn tree_files(dir: &Path) -> Result<BTreeSet<String>, FixtureError> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeSet<String>) -> Result<(), FixtureError> {
        for entry in fs::read_dir(dir).map_err(|e| io(dir, e))? {
            let entry = entry.map_err(|e| io(dir, e))?;
            let path = entry.path();
            if path.is_dir() {
                walk(base, &path, out)?;
            } else {
                let rel = path.strip_prefix(base).expect("under base");
                let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
                out.insert(rel.join("/"));
            }
        }
        Ok(())
    }
    let mut out = BTreeSet::new();
    if dir.exists() {
        walk(dir, dir, &mut out)?;
    }
    Ok(out)
}

fn copy_tree(from: &Path, to: &Path) -> Result<(), FixtureError> {
    for rel in tree_files(from)? {
        let dst = to.join(&rel);
        if let Some(parent) = dst.parent() {
            fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
        }
        fs::copy(from.join(&rel), &dst).map_err(|e| io(&dst, e))?;
    }
    Ok(())
}

fn remove_dir(dir: &Path) -> Result<(), FixtureError> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    Ok(())
}

pub fn unified_diff(golden: &str, actual: &str, file: &str) -> String {
    TextDiff::from_lines(golden, actual)
        .unified_diff()
        .context_radius(3)
        .header(&format!("golden/{file}"), &format!("replay/{file}"))
        .to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordReport {
    pub golden_files: usize,
    pub transcripts: usize,
}

/// Regenerate transcripts and golden files. `work_dir` receives the
/// scratch run directory.
pub fn record(root: &Path, prompts: &PromptSet, work_dir: &Path) -> Result<RecordReport, FixtureError> {
    let config = load_config(root)?;
    let cache_dir = root.join(CACHE_DIR);
    let golden = root.join(GOLDEN_DIR);
    remove_dir(&cache_dir)?;
    remove_dir(&golden)?;
    remove_dir(&work_dir.join(&config.run_id))?;

    let keys = AnswerKeyChannel::new();
    let client = LlmClient::new(Arc::new(FixtureAuthor::new(keys.clone(), config.seed)))
        .with_cache(TranscriptCache::new(&cache_dir))
        .with_concurrency(config.concurrency);
    let pipeline = Pipeline::new(config, work_dir, root, client.clone(), prompts.clone())?.with_answer_keys(keys);
    pipeline.run_all()?;
    copy_tree(&pipeline.run_dir, &golden)?;

    let ret = retention_dataset();
    let dir = root.join(RETENTION_DIR);
    write_jsonl(&dir.join(POINTS_FILE), &ret.points).map_err(|e| FixtureError::Io(e.to_string()))?;
    write_jsonl(&dir.join(PAIRS_FILE), &ret.pairs).map_err(|e| FixtureError::Io(e.to_string()))?;
    write_jsonl(&dir.join(VERDICTS_FILE), &ret.verdicts).map_err(|e| FixtureError::Io(e.to_string()))?;
    write_jsonl(&dir.join(MINIMAL_PAIRS_FILE), &ret.minimal_pairs).map_err(|e| FixtureError::Io(e.to_string()))?;

    Ok(RecordReport {
        golden_files: tree_files(&golden)?.len(),
        transcripts: client.cache().map_or(Ok(0), |c| c.hashes().map(|h| h.len())).map_err(|e| FixtureError::Io(e.to_string()))?,
    })
}

/// Replay the fixture pipeline into `work_dir` from recorded transcripts
/// only and compare every output with the golden tree.
pub fn verify(root: &Path, prompts: &PromptSet, work_dir: &Path) -> Result<VerifyReport, FixtureError> {
    let golden = root.join(GOLDEN_DIR);
    let golden_manifest = RunManifest::load(&golden)
        .map_err(FixtureError::Missing)?
        .ok_or_else(|| FixtureError::Missing(format!("{}/{MANIFEST_FILE}", golden.display())))?;

    let current = prompts.fingerprints();
    if current != golden_manifest.prompts {
        let mut expected = golden_manifest.clone();
        expected.prompts = current.clone();
        let diff = unified_diff(&golden_manifest.to_json(), &expected.to_json(), MANIFEST_FILE);
        let names: BTreeSet<&String> = golden_manifest.prompts.keys().chain(current.keys()).collect();
        let mismatches = names
            .into_iter()
            .filter(|n| golden_manifest.prompts.get(*n) != current.get(*n))
            .map(|n| Mismatch {
                stage: stage_for_template(n).to_string(),
                file: format!("prompts/{n}.txt"),
                diff: diff.clone(),
            })
            .collect();
        return Err(FixtureError::GoldenMismatch(mismatches));
    }

    let config = load_config(root)?;
    remove_dir(&work_dir.join(&config.run_id))?;
    let client = LlmClient::replay(FIXTURE_PROVIDER, TranscriptCache::new(root.join(CACHE_DIR)))
        .with_concurrency(config.concurrency);
    let pipeline = Pipeline::new(config, work_dir, root, client.clone(), prompts.clone())?;
    pipeline.run_all()?;

    let produced = tree_files(&pipeline.run_dir)?;
    let expected = tree_files(&golden)?;
    let mut mismatches = Vec::new();
    for rel in expected.union(&produced) {
        let read = |dir: &Path| fs::read_to_string(dir.join(rel)).unwrap_or_default();
        let (g, r) = (read(&golden), read(&pipeline.run_dir));
        let present = expected.contains(rel) && produced.contains(rel);
        if !present || g != r {
            mismatches.push(Mismatch {
                stage: golden_manifest.stage_of(rel).unwrap_or("unknown").to_string(),
                file: rel.clone(),
                diff: unified_diff(&g, &r, rel),
            });
        }
    }
    if !mismatches.is_empty() {
        return Err(FixtureError::GoldenMismatch(mismatches));
    }
    let c = client.counters();
    Ok(VerifyReport {
        run_dir: pipeline.run_dir.clone(),
        files: produced.len(),
        cache_hits: c.hits(),
        replay_misses: c.misses(),
        upstream_calls: c.upstream(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_stages() {
        assert_eq!(stage_for_template("task3"), "tasks-run");
        assert_eq!(stage_for_template("forge"), "pairs");
        assert_eq!(stage_for_template("extract_row"), "extract");
    }

    #[test]
    fn diff_names_both_sides() {
        let d = unified_diff("a\nb\n", "a\nc\n", "x.tsv");
        assert!(d.contains("--- golden/x.tsv"));
        assert!(d.contains("-b") && d.contains("+c"));
    }
}
