use crate::atelier::{LanguagePair, DEFAULT_CONTEXT_BUDGET, DEFAULT_DEDUP_THRESHOLD, DEFAULT_STRIDE, DEFAULT_WINDOW};
use crate::forge::FilterPolicy;
use crate::inspector::DEFAULT_HEADING_RATIO;
use crate::metrics::{Direction, MetricKind};
use crate::proofstand::{T2Mode, TaskKind};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

const DEFAULT_MODEL: &str = "gpt-5";

fn default_model() -> String {
    DEFAULT_MODEL.to_string()
}

/// Everything a run depends on. Every field has a default, so a config
/// file only lists overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run_id: String,
    pub seed: u64,
    pub concurrency: usize,
    /// Provider name; part of every request hash.
    pub provider: String,
    pub languages: LanguagePair,
    /// Models under evaluation (tasks and translation).
    pub models: Vec<String>,
    pub ingest: IngestSettings,
    pub segment: SegmentSettings,
    pub extract: ExtractSettings,
    pub generate: GenerateSettings,
    pub backcheck: BackcheckSettings,
    pub forge: ForgeSettings,
    pub tasks: TaskSettings,
    pub translate: TranslateSettings,
    pub score: ScoreSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run_id: "default".into(),
            seed: 13,
            concurrency: 4,
            provider: "openai".into(),
            languages: LanguagePair::default(),
            models: vec![default_model()],
            ingest: IngestSettings::default(),
            segment: SegmentSettings::default(),
            extract: ExtractSettings::default(),
            generate: GenerateSettings::default(),
            backcheck: BackcheckSettings::default(),
            forge: ForgeSettings::default(),
            tasks: TaskSettings::default(),
            translate: TranslateSettings::default(),
            score: ScoreSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.run_id.is_empty() || self.run_id.contains(['/', '\\']) || self.run_id.starts_with('.') {
            return Err(format!("run_id `{}` is not a plain directory name", self.run_id));
        }
        if self.concurrency == 0 {
            return Err("concurrency must be >= 1".into());
        }
        if self.extract.window == 0 || !(1..=self.extract.window).contains(&self.extract.stride) {
            return Err("extract.stride must lie in 1..=extract.window".into());
        }
        if self.generate.min_words > self.generate.max_words {
            return Err("generate.min_words exceeds generate.max_words".into());
        }
        if !(self.segment.heading_ratio > 0.0) {
            return Err("segment.heading_ratio must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSettings {
    /// Interchange file of the grammar book.
    pub source: PathBuf,
}

impl Default for IngestSettings {
    fn default() -> Self {
        IngestSettings {
            source: PathBuf::from("book.json"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentSettings {
    pub heading_ratio: f64,
    pub include_lexicon: bool,
}

impl Default for SegmentSettings {
    fn default() -> Self {
        SegmentSettings {
            heading_ratio: DEFAULT_HEADING_RATIO,
            include_lexicon: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSettings {
    pub model: String,
    pub window: usize,
    pub stride: usize,
    pub context_budget: usize,
    pub dedup_threshold: f64,
}

impl Default for ExtractSettings {
    fn default() -> Self {
        ExtractSettings {
            model: default_model(),
            window: DEFAULT_WINDOW,
            stride: DEFAULT_STRIDE,
            context_budget: DEFAULT_CONTEXT_BUDGET,
            dedup_threshold: DEFAULT_DEDUP_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSettings {
    pub model: String,
    pub count: u32,
    pub min_words: u32,
    pub max_words: u32,
}

impl Default for GenerateSettings {
    fn default() -> Self {
        GenerateSettings {
            model: default_model(),
            count: 3,
            min_words: 12,
            max_words: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackcheckSettings {
    pub model: String,
    pub min_score: f64,
    pub require_rule: bool,
}

impl Default for BackcheckSettings {
    fn default() -> Self {
        let p = FilterPolicy::default();
        BackcheckSettings {
            model: default_model(),
            min_score: p.min_score,
            require_rule: p.require_rule,
        }
    }
}

impl BackcheckSettings {
    pub fn policy(&self) -> FilterPolicy {
        FilterPolicy {
            min_score: self.min_score,
            require_rule: self.require_rule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForgeSettings {
    pub model: String,
}

impl Default for ForgeSettings {
    fn default() -> Self {
        ForgeSettings {
            model: default_model(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSettings {
    pub kinds: Vec<TaskKind>,
    pub instances: usize,
    pub t2_mode: T2Mode,
    pub t4_options: usize,
    /// Task 1 and 3 candidate points; the per-kind base when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grammars: Option<usize>,
    /// Task 2 distractors and task 3 paragraph sentences; the per-kind base when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sentences: Option<usize>,
    /// Kinds swept over option counts.
    pub sweep_kinds: Vec<TaskKind>,
    /// Option counts of the sweep; empty disables it.
    pub sweep_options: Vec<usize>,
}

impl Default for TaskSettings {
    fn default() -> Self {
        TaskSettings {
            kinds: TaskKind::ALL.to_vec(),
            instances: 500,
            t2_mode: T2Mode::Select,
            t4_options: 2,
            n_grammars: None,
            n_sentences: None,
            sweep_kinds: vec![TaskKind::T1, TaskKind::T2, TaskKind::T4],
            sweep_options: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TranslateSettings {
    pub direction: Direction,
    /// Dataset manifest of external segments; the run's verified pairs
    /// are used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreSettings {
    pub metrics: Vec<MetricKind>,
    pub judge_model: String,
    /// Subword vocabulary for BLEU; whitespace words when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab: Option<PathBuf>,
}

impl Default for ScoreSettings {
    fn default() -> Self {
        ScoreSettings {
            metrics: vec![MetricKind::Chrfpp, MetricKind::Bleu],
            judge_model: default_model(),
            vocab: None,
        }
    }
}
