//! The four probing tasks: building instances, rendering prompts, running
//! them against a model and scoring the replies.

mod build;
mod render;
mod run;

pub use build::{build_tasks, build_task1, build_task2, build_task3, build_task4};
pub use render::{answer_format, format_options, label, parse_answer, render_prompt, Parsed};
pub use run::{
    option_sweep, register_answer_keys, run_tasks, safe_name, score_tasks, sweep_config, RunOptions,
    SweepReport, TaskReport, TaskResult,
};

use crate::llm::LlmError;
use crate::template::TemplateError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProofstandError {
    #[error("invalid task configuration: {0}")]
    InvalidConfig(String),
    #[error("{kind}: pool too small, need {need} {what}, have {have}")]
    InsufficientPool {
        kind: TaskKind,
        what: &'static str,
        need: usize,
        have: usize,
    },
    #[error("minimal pair {mp_id} names unknown grammar point {gp_id}")]
    UnknownGrammarPoint { mp_id: String, gp_id: String },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("{error} ({completed} results persisted)")]
    Llm { error: LlmError, completed: usize },
    #[error("results mix task kinds {0} and {1}")]
    MixedKinds(TaskKind, TaskKind),
    #[error("results mix models {0} and {1}")]
    MixedModels(String, String),
    #[error("no results to score")]
    Empty,
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "task1")]
    T1,
    #[serde(rename = "task2")]
    T2,
    #[serde(rename = "task3")]
    T3,
    #[serde(rename = "task4")]
    T4,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [TaskKind::T1, TaskKind::T2, TaskKind::T3, TaskKind::T4];

    pub fn number(self) -> u8 {
        match self {
            TaskKind::T1 => 1,
            TaskKind::T2 => 2,
            TaskKind::T3 => 3,
            TaskKind::T4 => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        TaskKind::ALL.into_iter().find(|k| k.number() == n)
    }

    /// `task1` … `task4`.
    pub fn name(self) -> String {
        format!("task{}", self.number())
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "task{}", self.number())
    }
}

impl FromStr for TaskKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let digits = s.trim_start_matches("task").trim_start_matches(['t', 'T']);
        digits
            .parse::<u8>()
            .ok()
            .and_then(TaskKind::from_number)
            .ok_or_else(|| format!("unknown task kind `{s}` (expected 1-4)"))
    }
}

/// How task 2 presents sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum T2Mode {
    /// One matching sentence among `n_sentences` distractors.
    #[default]
    Select,
    /// One sentence per instance, answered Yes or No.
    Judge,
}

impl FromStr for T2Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "select" => Ok(T2Mode::Select),
            "judge" => Ok(T2Mode::Judge),
            _ => Err(format!("unknown task 2 mode `{s}` (expected select or judge)")),
        }
    }
}

pub const MAX_OPTIONS: usize = 26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub kind: TaskKind,
    /// Task 1: total candidate descriptions. Task 3: total candidate points.
    pub n_grammars: usize,
    /// Task 2: distractor sentences. Task 3: sentences in the paragraph.
    pub n_sentences: usize,
    /// Task 4: sentences shown (correct, its contrast, and contrasts of
    /// other minimal pairs).
    pub t4_options: usize,
    pub t2_mode: T2Mode,
    pub seed: u64,
    pub instances: usize,
}

impl TaskConfig {
    /// Base settings: 2 descriptions for task 1, 1 distractor for task 2,
    /// 4 points with 2 correct for task 3, a plain pair for task 4.
    pub fn base(kind: TaskKind, seed: u64, instances: usize) -> Self {
        let (n_grammars, n_sentences) = match kind {
            TaskKind::T1 => (2, 1),
            TaskKind::T2 => (2, 1),
            TaskKind::T3 => (4, 2),
            TaskKind::T4 => (2, 1),
        };
        TaskConfig {
            kind,
            n_grammars,
            n_sentences,
            t4_options: 2,
            t2_mode: T2Mode::Select,
            seed,
            instances,
        }
    }

    /// Number of options each rendered instance offers.
    pub fn option_count(&self) -> usize {
        match self.kind {
            TaskKind::T1 | TaskKind::T3 => self.n_grammars,
            TaskKind::T2 => match self.t2_mode {
                T2Mode::Select => self.n_sentences + 1,
                T2Mode::Judge => 2,
            },
            TaskKind::T4 => self.t4_options,
        }
    }

    pub fn validate(&self) -> Result<(), ProofstandError> {
        let bad = |m: String| Err(ProofstandError::InvalidConfig(m));
        if self.instances == 0 {
            return bad("instances must be >= 1".into());
        }
        match self.kind {
            TaskKind::T1 if self.n_grammars < 2 => return bad("task 1 needs n_grammars >= 2".into()),
            TaskKind::T2 if self.n_sentences < 1 => return bad("task 2 needs n_sentences >= 1".into()),
            TaskKind::T3 if self.n_sentences < 1 || self.n_grammars < self.n_sentences => {
                return bad("task 3 needs n_grammars >= n_sentences >= 1".into())
            }
            TaskKind::T4 if self.t4_options < 2 => return bad("task 4 needs t4_options >= 2".into()),
            _ => {}
        }
        if self.option_count() > MAX_OPTIONS {
            return bad(format!("{} options exceed the {MAX_OPTIONS} labels A-Z", self.option_count()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct InstanceProvenance {
    /// Grammar points the stem instantiates.
    pub stem_gp_ids: Vec<String>,
    /// Pairs or minimal pairs the stem and options were drawn from.
    pub source_ids: Vec<String>,
    /// Grammar point each option traces to, parallel to `candidates`;
    /// empty for Yes/No options.
    pub option_gp_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub instance_id: String,
    pub kind: TaskKind,
    pub mode: T2Mode,
    /// Sentence (task 1), grammar description (tasks 2 and 4) or
    /// paragraph (task 3).
    pub stem: String,
    /// English equivalent (task 1) or the sentence under judgment
    /// (task 2, judge mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<String>,
    /// Option texts; labels are A, B, C… in this order.
    pub candidates: Vec<String>,
    /// Sorted correct labels.
    pub key: Vec<String>,
    pub provenance: InstanceProvenance,
}

impl TaskInstance {
    pub fn labels(&self) -> Vec<String> {
        (0..self.candidates.len()).map(label).collect()
    }
}
