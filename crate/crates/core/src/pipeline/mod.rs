//! Stage orchestration over a run directory.
//!
//! Each stage reads the files of earlier stages from `runs/<run_id>/`,
//! writes its own outputs atomically and records their fingerprints in
//! `manifest.json`. Re-running a stage rewrites its outputs in full, so
//! records are never duplicated; with a transcript cache, re-running costs
//! no upstream calls.

mod config;
mod manifest;
mod stages;

pub use config::{
    BackcheckSettings, ExtractSettings, ForgeSettings, GenerateSettings, IngestSettings,
    RunConfig, ScoreSettings, SegmentSettings, TaskSettings, TranslateSettings,
};
pub use manifest::{RunManifest, StageRecord, MANIFEST_FILE};

use crate::atelier::AtelierError;
use crate::forge::ForgeError;
use crate::inspector::InspectorError;
use crate::jsonl::JsonlError;
use crate::llm::{AnswerKeyChannel, LlmClient, LlmError};
use crate::metrics::MetricError;
use crate::proofstand::{ProofstandError, TaskKind};
use crate::stats::StatsError;
use crate::template::{PromptSet, TemplateError};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ingest,
    Segment,
    Extract,
    Generate,
    Backcheck,
    Pairs,
    TasksBuild,
    TasksRun,
    TasksSweep,
    Translate,
    Score,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::Ingest,
        Stage::Segment,
        Stage::Extract,
        Stage::Generate,
        Stage::Backcheck,
        Stage::Pairs,
        Stage::TasksBuild,
        Stage::TasksRun,
        Stage::TasksSweep,
        Stage::Translate,
        Stage::Score,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Segment => "segment",
            Stage::Extract => "extract",
            Stage::Generate => "generate",
            Stage::Backcheck => "backcheck",
            Stage::Pairs => "pairs",
            Stage::TasksBuild => "tasks-build",
            Stage::TasksRun => "tasks-run",
            Stage::TasksSweep => "tasks-sweep",
            Stage::Translate => "translate",
            Stage::Score => "score",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Inspector(#[from] InspectorError),
    #[error(transparent)]
    Atelier(#[from] AtelierError),
    #[error(transparent)]
    Forge(#[from] ForgeError),
    #[error(transparent)]
    Proofstand(#[from] ProofstandError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("stage {stage} needs {missing}; run the earlier stage first")]
    MissingInput { stage: Stage, missing: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("manifest: {0}")]
    Manifest(String),
}

impl PipelineError {
    /// The LLM failure underneath, if any.
    pub fn llm_error(&self) -> Option<&LlmError> {
        match self {
            PipelineError::Atelier(AtelierError::Llm(e))
            | PipelineError::Forge(ForgeError::Llm(e))
            | PipelineError::Metric(MetricError::Llm(e))
            | PipelineError::Proofstand(ProofstandError::Llm { error: e, .. }) => Some(e),
            _ => None,
        }
    }

    /// Short machine-readable error kind.
    pub fn kind(&self) -> &'static str {
        if let Some(e) = self.llm_error() {
            return e.kind();
        }
        match self {
            PipelineError::Inspector(e) => match e {
                InspectorError::MalformedInterchange { .. } => "MalformedInterchange",
                InspectorError::EmptyDocument => "EmptyDocument",
                InspectorError::NoGrammarSections { .. } => "NoGrammarSections",
                InspectorError::Io { .. } => "Io",
            },
            PipelineError::Atelier(AtelierError::UnparseableReply { .. })
            | PipelineError::Forge(ForgeError::UnparseableReply { .. })
            | PipelineError::Metric(MetricError::UnparseableReply { .. }) => "UnparseableReply",
            PipelineError::Atelier(_) => "AtelierError",
            PipelineError::Forge(_) => "ForgeError",
            PipelineError::Proofstand(ProofstandError::InsufficientPool { .. }) => "InsufficientPool",
            PipelineError::Proofstand(_) => "ProofstandError",
            PipelineError::Metric(MetricError::EmptyReference) => "EmptyReference",
            PipelineError::Metric(MetricError::AlignmentMismatch(_)) => "AlignmentMismatch",
            PipelineError::Metric(MetricError::VocabMissing { .. }) => "VocabMissing",
            PipelineError::Metric(_) => "MetricError",
            PipelineError::Stats(_) => "StatsError",
            PipelineError::Template(_) => "TemplateError",
            PipelineError::Jsonl(_) => "Io",
            PipelineError::MissingInput { .. } => "MissingInput",
            PipelineError::Config(_) => "ConfigError",
            PipelineError::Manifest(_) => "ManifestError",
        }
    }
}

/// What a stage did, for progress output.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSummary {
    pub stage: Stage,
    pub outputs: Vec<String>,
    pub note: String,
}

/// A configured run over one run directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: RunConfig,
    /// `runs/<run_id>`.
    pub run_dir: PathBuf,
    /// Base for relative paths in the config.
    pub base_dir: PathBuf,
    pub client: LlmClient,
    pub prompts: PromptSet,
    /// Hidden answer keys for oracle mocks; registered before task runs.
    pub keys: Option<AnswerKeyChannel>,
}

impl Pipeline {
    pub fn new(
        config: RunConfig,
        runs_root: &Path,
        base_dir: &Path,
        client: LlmClient,
        prompts: PromptSet,
    ) -> Result<Self, PipelineError> {
        config.validate().map_err(PipelineError::Config)?;
        Ok(Pipeline {
            run_dir: runs_root.join(&config.run_id),
            base_dir: base_dir.to_path_buf(),
            config,
            client,
            prompts,
            keys: None,
        })
    }

    pub fn with_answer_keys(mut self, keys: AnswerKeyChannel) -> Self {
        self.keys = Some(keys);
        self
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn manifest(&self) -> Result<Option<RunManifest>, PipelineError> {
        RunManifest::load(&self.run_dir).map_err(PipelineError::Manifest)
    }

    /// Stages a full run executes: the sweep only when option counts are
    /// configured.
    pub fn plan(&self) -> Vec<Stage> {
        Stage::ALL
            .into_iter()
            .filter(|s| *s != Stage::TasksSweep || !self.config.tasks.sweep_options.is_empty())
            .collect()
    }

    pub fn run_all(&self) -> Result<Vec<StageSummary>, PipelineError> {
        self.plan().into_iter().map(|s| self.run_stage(s)).collect()
    }

    /// Run one stage and record its outputs in the manifest.
    pub fn run_stage(&self, stage: Stage) -> Result<StageSummary, PipelineError> {
        log::info!("stage {stage} in {}", self.run_dir.display());
        let summary = match stage {
            Stage::Ingest => self.ingest(),
            Stage::Segment => self.segment(),
            Stage::Extract => self.extract(),
            Stage::Generate => self.generate(),
            Stage::Backcheck => self.backcheck(),
            Stage::Pairs => self.forge_pairs(),
            Stage::TasksBuild => self.tasks_build(),
            Stage::TasksRun => self.tasks_run(),
            Stage::TasksSweep => self.tasks_sweep(),
            Stage::Translate => self.translate(),
            Stage::Score => self.score(),
            Stage::Report => self.report(),
        }?;
        let mut manifest = self
            .manifest()?
            .unwrap_or_else(|| RunManifest::new(self.config.clone(), self.prompts.fingerprints()));
        manifest.config = self.config.clone();
        manifest.prompts = self.prompts.fingerprints();
        manifest
            .record(&self.run_dir, stage.name(), &summary.outputs)
            .map_err(PipelineError::Manifest)?;
        crate::jsonl::write_atomic(&self.run_dir.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
        Ok(summary)
    }
}

/// Run-relative file names.
pub mod paths {
    use super::TaskKind;
    use crate::proofstand::safe_name;

    pub const DOCUMENT: &str = "document.json";
    pub const CHAPTERS: &str = "chapters.jsonl";
    pub const SEGMENTS: &str = "translations/segments.jsonl";

    pub fn tasks(kind: TaskKind) -> String {
        format!("tasks/{kind}.jsonl")
    }

    pub fn results(model: &str, kind: TaskKind) -> String {
        format!("results/{}__{kind}.jsonl", safe_name(model))
    }

    pub fn sweep_dir() -> &'static str {
        "sweeps"
    }

    pub fn sweep_report(model: &str, kind: TaskKind) -> String {
        format!("sweeps/{}__{kind}.json", safe_name(model))
    }

    pub fn sweep_tsv(model: &str, kind: TaskKind) -> String {
        format!("sweeps/{}__{kind}.tsv", safe_name(model))
    }

    pub fn sweep_results(model: &str, kind: TaskKind, n: usize) -> String {
        format!("sweeps/{}__{kind}__n{n}.jsonl", safe_name(model))
    }

    pub fn hypotheses(model: &str) -> String {
        format!("translations/{}.jsonl", safe_name(model))
    }

    pub fn bridge(model: &str) -> String {
        format!("translations/{}.bridge.jsonl", safe_name(model))
    }

    pub fn external_scores(model: &str) -> String {
        format!("scores/{}.external.jsonl", safe_name(model))
    }

    pub fn judge_scores(model: &str) -> String {
        format!("scores/{}.judge.jsonl", safe_name(model))
    }

    pub fn scores(model: &str) -> String {
        format!("scores/{}.jsonl", safe_name(model))
    }

    pub const REPORT_DIR: &str = "report";
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.name().parse::<Stage>().unwrap(), s);
        }
        assert!("tasks".parse::<Stage>().is_err());
    }

    #[test]
    fn replay_miss_kind_surfaces() {
        let e = PipelineError::Atelier(AtelierError::Llm(LlmError::ReplayMiss { hash: "ab".into() }));
        assert_eq!(e.kind(), "ReplayMiss");
        let e = PipelineError::Proofstand(ProofstandError::Llm {
            error: LlmError::ReplayMiss { hash: "ab".into() },
            completed: 3,
        });
        assert_eq!(e.kind(), "ReplayMiss");
    }
}
