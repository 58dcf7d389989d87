use super::{
    build_tasks, parse_answer, render_prompt, Parsed, ProofstandError, T2Mode, TaskConfig,
    TaskInstance, TaskKind,
};
use crate::dataset::Dataset;
use crate::jsonl::{append_jsonl, read_jsonl_or_empty, write_jsonl};
use crate::llm::{AnswerKeyChannel, AnswerSpec, ChatMessage, LlmClient, LlmRequest, Purpose};
use crate::parallel::bounded_map;
use crate::stats::{binomial_std, bootstrap_std, SweepCurve, SweepPoint, TaskCell, DEFAULT_RESAMPLES};
use crate::template::{PromptSet, TemplateError};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub instance_id: String,
    pub kind: TaskKind,
    pub model_id: String,
    pub raw_reply: String,
    pub parsed: Parsed,
    pub correct: bool,
    /// Share of key labels chosen, zero when unparseable. Equals `correct`
    /// for single-key tasks.
    pub partial_credit: f64,
    pub latency_ms: u64,
    pub request_hash: String,
}

impl TaskResult {
    pub fn grade(inst: &TaskInstance, model_id: &str, raw: String, latency_ms: u64, request_hash: String) -> Self {
        let parsed = parse_answer(&raw, inst);
        let key: BTreeSet<String> = inst.key.iter().cloned().collect();
        let (correct, partial_credit) = match parsed.labels() {
            Some(l) => (
                *l == key,
                l.intersection(&key).count() as f64 / key.len().max(1) as f64,
            ),
            None => (false, 0.0),
        };
        TaskResult {
            instance_id: inst.instance_id.clone(),
            kind: inst.kind,
            model_id: model_id.to_string(),
            raw_reply: raw,
            parsed,
            correct,
            partial_credit,
            latency_ms,
            request_hash,
        }
    }
}

/// Make every instance's key readable by an oracle mock.
pub fn register_answer_keys(
    instances: &[TaskInstance],
    prompts: &PromptSet,
    channel: &AnswerKeyChannel,
) -> Result<(), TemplateError> {
    for inst in instances {
        channel.register(
            &render_prompt(inst, prompts)?,
            AnswerSpec {
                labels: inst.labels(),
                key: inst.key.iter().cloned().collect(),
            },
        );
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub model_id: String,
    /// Results file; existing results for these instances are reused and
    /// new ones appended as they complete.
    pub results_path: Option<PathBuf>,
}

impl RunOptions {
    pub fn new(model_id: &str) -> Self {
        RunOptions {
            model_id: model_id.to_string(),
            results_path: None,
        }
    }
}

fn io(e: impl std::fmt::Display) -> ProofstandError {
    ProofstandError::Io(e.to_string())
}

/// Ask the model every instance. Results come back in instance order; the
/// results file ends up holding exactly those results, in that order.
pub fn run_tasks(
    instances: &[TaskInstance],
    client: &LlmClient,
    prompts: &PromptSet,
    opts: &RunOptions,
) -> Result<Vec<TaskResult>, ProofstandError> {
    let mut done: HashMap<String, TaskResult> = HashMap::new();
    if let Some(path) = &opts.results_path {
        for r in read_jsonl_or_empty::<TaskResult>(path).map_err(io)? {
            if r.model_id == opts.model_id {
                done.insert(r.instance_id.clone(), r);
            }
        }
    }
    let pending: Vec<&TaskInstance> = instances
        .iter()
        .filter(|i| !done.contains_key(&i.instance_id))
        .collect();
    let sink = Mutex::new(());
    let fresh = bounded_map(&pending, client.concurrency(), |_, inst| {
        let prompt = render_prompt(inst, prompts)?;
        let req = LlmRequest::new(
            client.provider_name(),
            &opts.model_id,
            Purpose::Task,
            vec![ChatMessage::user(prompt)],
        );
        let reply = client.cached_complete(&req).map_err(|error| ProofstandError::Llm { error, completed: 0 })?;
        let result = TaskResult::grade(inst, &opts.model_id, reply.text, reply.latency_ms, req.request_hash());
        if let Some(path) = &opts.results_path {
            let _guard = sink.lock().expect("results lock");
            append_jsonl(path, &result).map_err(io)?;
        }
        Ok::<_, ProofstandError>(result)
    });
    let mut first_error = None;
    for r in fresh {
        match r {
            Ok(r) => {
                done.insert(r.instance_id.clone(), r);
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let ordered: Vec<TaskResult> = instances
        .iter()
        .filter_map(|i| done.get(&i.instance_id).cloned())
        .collect();
    if let Some(path) = &opts.results_path {
        write_jsonl(path, &ordered).map_err(io)?;
    }
    match first_error {
        None => Ok(ordered),
        Some(ProofstandError::Llm { error, .. }) => Err(ProofstandError::Llm {
            error,
            completed: ordered.len(),
        }),
        Some(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub kind: TaskKind,
    pub model_id: String,
    pub n: usize,
    pub accuracy: f64,
    /// Seeded bootstrap standard deviation of the accuracy.
    pub std: f64,
    pub binomial_std: f64,
    pub unparseable_rate: f64,
    pub partial_credit: f64,
}

impl TaskReport {
    pub fn cell(&self) -> TaskCell {
        TaskCell {
            model_id: self.model_id.clone(),
            task: self.kind.name(),
            accuracy: self.accuracy,
            std: self.std,
            binomial_std: self.binomial_std,
            n: self.n,
            unparseable_rate: self.unparseable_rate,
        }
    }
}

/// Accuracy with bootstrap std for results of one kind and one model.
pub fn score_tasks(results: &[TaskResult], seed: u64) -> Result<TaskReport, ProofstandError> {
    let first = results.first().ok_or(ProofstandError::Empty)?;
    for r in results {
        if r.kind != first.kind {
            return Err(ProofstandError::MixedKinds(first.kind, r.kind));
        }
        if r.model_id != first.model_id {
            return Err(ProofstandError::MixedModels(first.model_id.clone(), r.model_id.clone()));
        }
    }
    let n = results.len();
    let outcomes: Vec<bool> = results.iter().map(|r| r.correct).collect();
    let accuracy = outcomes.iter().filter(|c| **c).count() as f64 / n as f64;
    let std = if n == 1 {
        0.0
    } else {
        bootstrap_std::<f64>(&outcomes, DEFAULT_RESAMPLES, seed).expect("non-empty outcomes")
    };
    Ok(TaskReport {
        kind: first.kind,
        model_id: first.model_id.clone(),
        n,
        accuracy,
        std,
        binomial_std: binomial_std(accuracy, n),
        unparseable_rate: results.iter().filter(|r| r.parsed == Parsed::Unparseable).count() as f64 / n as f64,
        partial_credit: results.iter().map(|r| r.partial_credit).sum::<f64>() / n as f64,
    })
}

/// The configuration presenting `n` options for the base configuration's
/// kind: task 1 and 3 vary the candidate descriptions, task 2 the
/// distractor sentences, task 4 the sentences shown.
pub fn sweep_config(base: &TaskConfig, n: usize) -> Result<TaskConfig, ProofstandError> {
    let mut cfg = base.clone();
    match base.kind {
        TaskKind::T1 | TaskKind::T3 => cfg.n_grammars = n,
        TaskKind::T2 if base.t2_mode == T2Mode::Judge => {
            return Err(ProofstandError::InvalidConfig("judge mode always offers Yes/No; sweep select mode".into()))
        }
        TaskKind::T2 => cfg.n_sentences = n.saturating_sub(1),
        TaskKind::T4 => cfg.t4_options = n,
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: TaskKind,
    pub model_id: String,
    /// (options shown, report) in the order requested.
    pub points: Vec<(usize, TaskReport)>,
}

impl SweepReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("n_options\taccuracy\tstd\tn\n");
        for (k, r) in &self.points {
            out.push_str(&format!("{k}\t{:.6}\t{:.6}\t{}\n", r.accuracy, r.std, r.n));
        }
        out
    }

    pub fn curve(&self) -> SweepCurve {
        SweepCurve {
            model_id: self.model_id.clone(),
            task: self.kind.name(),
            points: self
                .points
                .iter()
                .map(|(k, r)| SweepPoint {
                    n_options: *k,
                    accuracy: r.accuracy,
                    std: r.std,
                    n: r.n,
                })
                .collect(),
        }
    }
}

/// Build, run and score one instance set per option count. Every set
/// derives from the base seed. With `results_dir`, results persist as
/// `<model>__task<k>__n<n>.jsonl`.
#[allow(clippy::too_many_arguments)]
pub fn option_sweep(
    ds: &Dataset,
    base: &TaskConfig,
    n_values: &[usize],
    client: &LlmClient,
    prompts: &PromptSet,
    model_id: &str,
    keys: Option<&AnswerKeyChannel>,
    results_dir: Option<&Path>,
) -> Result<SweepReport, ProofstandError> {
    let mut points = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let cfg = sweep_config(base, n)?;
        let instances = build_tasks(ds, &cfg)?;
        if let Some(ch) = keys {
            register_answer_keys(&instances, prompts, ch)?;
        }
        let opts = RunOptions {
            model_id: model_id.to_string(),
            results_path: results_dir.map(|d| d.join(format!("{}__{}__n{n}.jsonl", safe_name(model_id), base.kind))),
        };
        let results = run_tasks(&instances, client, prompts, &opts)?;
        points.push((n, score_tasks(&results, cfg.seed)?));
    }
    Ok(SweepReport {
        kind: base.kind,
        model_id: model_id.to_string(),
        points,
    })
}

/// Model id made safe for a file name.
pub fn safe_name(model_id: &str) -> String {
    model_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}
