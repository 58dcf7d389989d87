use super::{correlation_matrix, CorrelationMatrix, Method, ModelRow, StatsError};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskCell {
    pub model_id: String,
    /// `task1` … `task4`.
    pub task: String,
    pub accuracy: f64,
    pub std: f64,
    pub binomial_std: f64,
    pub n: usize,
    pub unparseable_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub model_id: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_options: usize,
    pub accuracy: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub model_id: String,
    pub task: String,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportInput {
    pub tasks: Vec<TaskCell>,
    pub metrics: Vec<MetricCell>,
    pub sweeps: Vec<SweepCurve>,
}

/// Report files keyed by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub files: BTreeMap<String, String>,
}

impl ReportBundle {
    pub fn write_to(&self, dir: &Path) -> Result<(), StatsError> {
        for (name, body) in &self.files {
            crate::jsonl::write_atomic(&dir.join(name), body.as_bytes())
                .map_err(|e| StatsError::Io(e.to_string()))?;
        }
        Ok(())
    }
}

fn metric_rank(m: &str) -> (usize, String) {
    let pos = ["chrfpp", "bleu", "judge", "external"]
        .iter()
        .position(|k| *k == m)
        .unwrap_or(usize::MAX);
    (pos, m.to_string())
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), f6)
}

struct Grid {
    models: Vec<String>,
    tasks: Vec<String>,
    metrics: Vec<String>,
    task_cells: BTreeMap<(String, String), TaskCell>,
    metric_cells: BTreeMap<(String, String), MetricCell>,
}

fn build_grid(input: &ReportInput) -> Result<Grid, StatsError> {
    let task_models: BTreeSet<&str> = input.tasks.iter().map(|c| c.model_id.as_str()).collect();
    let metric_models: BTreeSet<&str> = input.metrics.iter().map(|c| c.model_id.as_str()).collect();
    if !task_models.is_empty() && !metric_models.is_empty() && task_models != metric_models {
        let only_t: Vec<_> = task_models.difference(&metric_models).collect();
        let only_m: Vec<_> = metric_models.difference(&task_models).collect();
        return Err(StatsError::IdMismatch(format!(
            "task results only: {only_t:?}; scores only: {only_m:?}"
        )));
    }
    let models: BTreeSet<&str> = task_models.union(&metric_models).copied().collect();
    for s in &input.sweeps {
        if !models.is_empty() && !models.contains(s.model_id.as_str()) {
            return Err(StatsError::IdMismatch(format!("sweep for unknown model {}", s.model_id)));
        }
    }
    let mut task_cells = BTreeMap::new();
    for c in &input.tasks {
        if task_cells.insert((c.model_id.clone(), c.task.clone()), c.clone()).is_some() {
            return Err(StatsError::IdMismatch(format!("duplicate {} result for {}", c.task, c.model_id)));
        }
    }
    let mut metric_cells = BTreeMap::new();
    for c in &input.metrics {
        if metric_cells.insert((c.model_id.clone(), c.metric.clone()), c.clone()).is_some() {
            return Err(StatsError::IdMismatch(format!("duplicate {} score for {}", c.metric, c.model_id)));
        }
    }
    let tasks: BTreeSet<String> = input.tasks.iter().map(|c| c.task.clone()).collect();
    let mut metrics: Vec<String> = input
        .metrics
        .iter()
        .map(|c| c.metric.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    metrics.sort_by_key(|m| metric_rank(m));
    Ok(Grid {
        models: models.into_iter().map(String::from).collect(),
        tasks: tasks.into_iter().collect(),
        metrics,
        task_cells,
        metric_cells,
    })
}

impl Grid {
    fn task(&self, model: &str, task: &str) -> Option<&TaskCell> {
        self.task_cells.get(&(model.to_string(), task.to_string()))
    }

    fn metric(&self, model: &str, metric: &str) -> Option<&MetricCell> {
        self.metric_cells.get(&(model.to_string(), metric.to_string()))
    }

    fn tsv(&self) -> String {
        let mut out = String::from("model_id");
        for t in &self.tasks {
            let _ = write!(out, "\t{t}_acc\t{t}_std");
        }
        for m in &self.metrics {
            let _ = write!(out, "\t{m}_mean\t{m}_std");
        }
        out.push('\n');
        for model in &self.models {
            out.push_str(model);
            for t in &self.tasks {
                let c = self.task(model, t);
                let _ = write!(out, "\t{}\t{}", cell(c.map(|c| c.accuracy)), cell(c.map(|c| c.std)));
            }
            for m in &self.metrics {
                let c = self.metric(model, m);
                let _ = write!(out, "\t{}\t{}", cell(c.map(|c| c.mean)), cell(c.map(|c| c.std)));
            }
            out.push('\n');
        }
        out
    }

    /// One row per model over the columns every model has.
    fn correlation_rows(&self) -> Vec<ModelRow<f64>> {
        let mut cols: Vec<(String, Box<dyn Fn(&str) -> Option<f64> + '_>)> = Vec::new();
        for t in &self.tasks {
            let t2 = t.clone();
            cols.push((t.clone(), Box::new(move |m| self.task(m, &t2).map(|c| c.accuracy))));
        }
        for k in &self.metrics {
            let k2 = k.clone();
            cols.push((k.clone(), Box::new(move |m| self.metric(m, &k2).map(|c| c.mean))));
        }
        cols.retain(|(_, f)| self.models.iter().all(|m| f(m).is_some()));
        self.models
            .iter()
            .map(|m| {
                ModelRow::new(
                    m,
                    cols.iter()
                        .map(|(name, f)| (name.clone(), f(m).expect("complete column")))
                        .collect(),
                )
            })
            .collect()
    }
}

fn matrix_tsv(m: &CorrelationMatrix<f64>) -> String {
    let mut out = String::from(m.method.to_string().as_str());
    for l in &m.labels {
        let _ = write!(out, "\t{l}");
    }
    out.push('\n');
    for (i, l) in m.labels.iter().enumerate() {
        out.push_str(l);
        for v in &m.values[i] {
            let _ = write!(out, "\t{}", cell(*v));
        }
        out.push('\n');
    }
    out
}

fn sweep_tsv(curves: &[&SweepCurve]) -> String {
    let mut out = String::from("model_id\tn_options\taccuracy\tstd\tn\n");
    for c in curves {
        for p in &c.points {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                c.model_id,
                p.n_options,
                f6(p.accuracy),
                f6(p.std),
                p.n
            );
        }
    }
    out
}

/// Build the report files: `grid.tsv`, `corr_pearson.tsv`,
/// `corr_spearman.tsv`, `corr_long.tsv`, `sweep_<task>.tsv` and `summary.md`.
pub fn export_report(input: &ReportInput) -> Result<ReportBundle, StatsError> {
    let grid = build_grid(input)?;
    let mut files = BTreeMap::new();
    let mut md = String::from("# Benchmark report\n\n");

    files.insert("grid.tsv".to_string(), grid.tsv());
    let _ = writeln!(md, "## Results\n");
    let mut header = String::from("| model |");
    let mut rule = String::from("|---|");
    for t in &grid.tasks {
        let _ = write!(header, " {t} |");
        rule.push_str("---|");
    }
    for m in &grid.metrics {
        let _ = write!(header, " {m} |");
        rule.push_str("---|");
    }
    let _ = writeln!(md, "{header}\n{rule}");
    for model in &grid.models {
        let mut line = format!("| {model} |");
        for t in &grid.tasks {
            match grid.task(model, t) {
                Some(c) => {
                    let _ = write!(line, " {:.3} ± {:.3} |", c.accuracy, c.std);
                }
                None => line.push_str(" NA |"),
            }
        }
        for m in &grid.metrics {
            match grid.metric(model, m) {
                Some(c) => {
                    let _ = write!(line, " {:.2} ± {:.2} |", c.mean, c.std);
                }
                None => line.push_str(" NA |"),
            }
        }
        let _ = writeln!(md, "{line}");
    }
    let unparseable: Vec<&TaskCell> = input.tasks.iter().filter(|c| c.unparseable_rate > 0.0).collect();
    if !unparseable.is_empty() {
        let _ = writeln!(md, "\nUnparseable replies (scored incorrect):\n");
        for c in unparseable {
            let _ = writeln!(md, "- {} {}: {:.3}", c.model_id, c.task, c.unparseable_rate);
        }
    }

    let _ = writeln!(md, "\n## Correlations\n");
    let rows = grid.correlation_rows();
    if rows.len() >= 3 && !rows[0].columns.is_empty() {
        let mut long = String::from("method\trow\tcolumn\tvalue\n");
        for method in [Method::Pearson, Method::Spearman] {
            let m = correlation_matrix(&rows, method)?;
            files.insert(format!("corr_{method}.tsv"), matrix_tsv(&m));
            for (a, b, v) in m.long_form() {
                let _ = writeln!(long, "{method}\t{a}\t{b}\t{}", cell(v));
            }
        }
        files.insert("corr_long.tsv".to_string(), long);
        let _ = writeln!(
            md,
            "Pearson and Spearman matrices over {} models: `corr_pearson.tsv`, `corr_spearman.tsv`. NA marks a constant column.",
            rows.len()
        );
    } else {
        let _ = writeln!(md, "Skipped: correlations need at least 3 models with complete columns.");
    }

    let sweep_tasks: BTreeSet<&str> = input.sweeps.iter().map(|s| s.task.as_str()).collect();
    if !sweep_tasks.is_empty() {
        let _ = writeln!(md, "\n## Option-count sweeps\n");
        for task in sweep_tasks {
            let curves: Vec<&SweepCurve> = input.sweeps.iter().filter(|s| s.task == task).collect();
            files.insert(format!("sweep_{task}.tsv"), sweep_tsv(&curves));
            let _ = writeln!(md, "### {task}\n\n| model | options | accuracy |\n|---|---|---|");
            for c in curves {
                for p in &c.points {
                    let _ = writeln!(md, "| {} | {} | {:.3} ± {:.3} |", c.model_id, p.n_options, p.accuracy, p.std);
                }
            }
            md.push('\n');
        }
    }
    files.insert("summary.md".to_string(), md);
    Ok(ReportBundle { files })
}
