mod score_files;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use gramprobe::dataset::{validate, Dataset};
use gramprobe::fixtures::{self, FixtureAuthor, FixtureError, FIXTURE_PROVIDER};
use gramprobe::llm::{
    AnswerKeyChannel, LlmClient, OpenAiCompatProvider, ProvidersConfig, TranscriptCache,
};
use gramprobe::metrics::MetricKind;
use gramprobe::pipeline::{Pipeline, PipelineError, RunConfig, Stage, StageSummary};
use gramprobe::proofstand::{T2Mode, TaskKind};
use gramprobe::stats::export_report;
use gramprobe::template::PromptSet;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser, Debug)]
#[command(name = "gramprobe", version, about = "Build and run grammar-competence benchmarks from a grammar book")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Run configuration (TOML); relative paths inside resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Transcript cache directory.
    #[arg(long, global = true, default_value = "cache")]
    cache_dir: PathBuf,
    /// Answer only from the cache; a miss is an error.
    #[arg(long, global = true)]
    replay_only: bool,
    #[arg(long, global = true)]
    concurrency: Option<usize>,
    #[arg(long, global = true)]
    run_id: Option<String>,
    /// Provider name from the providers file, or `fixture` for the offline author.
    #[arg(long, global = true)]
    provider: Option<String>,
    #[arg(long, global = true, default_value = "providers.toml")]
    providers_file: PathBuf,
    /// Directory of prompt templates overriding the built-in ones.
    #[arg(long, global = true)]
    prompts_dir: Option<PathBuf>,
    #[arg(long, global = true, default_value = "runs")]
    runs_dir: PathBuf,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse the interchange file into the run directory.
    Ingest {
        #[arg(long)]
        source: Option<PathBuf>,
    },
    /// Split the document into chapters and classify them.
    Segment,
    /// Extract grammar points from grammar chapters and tables.
    Extract,
    /// Generate example pairs per grammar point.
    Generate,
    /// Back-check example pairs and filter them.
    Backcheck {
        #[arg(long)]
        min_score: Option<f64>,
        #[arg(long)]
        require_rule: Option<bool>,
    },
    /// Forge minimal pairs from verified pairs.
    Pairs,
    /// Probing tasks.
    Tasks {
        #[command(subcommand)]
        action: TasksAction,
    },
    /// Translate segments with every evaluated model.
    Translate {
        #[arg(long = "model", value_delimiter = ',')]
        models: Vec<String>,
    },
    /// Score translations.
    Score {
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<MetricKind>,
        /// Subword vocabulary for BLEU.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long = "model", value_delimiter = ',')]
        models: Vec<String>,
        #[command(flatten)]
        files: ScoreFiles,
    },
    /// Aggregate results into report tables.
    Report {
        /// Write the report here instead of the run's report/ directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check dataset invariants and print counts.
    Validate {
        /// Dataset directory; defaults to the run directory.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Run every stage in order.
    Pipeline,
    /// Offline fixture set.
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
    },
}

/// Score line-aligned text files instead of a run directory.
#[derive(Args, Debug)]
struct ScoreFiles {
    /// Hypotheses, one segment per line.
    #[arg(long, requires = "reference")]
    hyp: Option<PathBuf>,
    /// References, one segment per line.
    #[arg(long = "ref", id = "reference", requires = "hyp")]
    reference: Option<PathBuf>,
    /// Sources, one segment per line; needed by the judge metric.
    #[arg(long, requires = "hyp")]
    src: Option<PathBuf>,
    /// Scorer-bridge output with {segment_id, score} lines.
    #[arg(long, requires = "hyp")]
    external: Option<PathBuf>,
    #[arg(long, requires = "hyp", default_value = "scores.jsonl")]
    out: PathBuf,
    /// Model id written into the score rows.
    #[arg(long, requires = "hyp", default_value = "hypothesis")]
    model_id: String,
}

#[derive(Args, Debug, Clone)]
struct TaskOpts {
    /// Task kinds (1-4 or task1-task4).
    #[arg(long = "kind", value_delimiter = ',')]
    kinds: Vec<TaskKind>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    n_grammars: Option<usize>,
    #[arg(long)]
    n_sentences: Option<usize>,
    #[arg(long)]
    t2_mode: Option<T2Mode>,
    #[arg(long)]
    t4_options: Option<usize>,
    /// Evaluated models; defaults to the configured list.
    #[arg(long = "model", value_delimiter = ',')]
    models: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum TasksAction {
    Build(TaskOpts),
    Run(TaskOpts),
    Sweep {
        #[command(flatten)]
        opts: TaskOpts,
        /// Option counts to sweep.
        #[arg(long = "n", value_delimiter = ',')]
        options: Vec<usize>,
    },
}

#[derive(Args, Debug)]
struct FixtureOpts {
    #[arg(long, default_value = "fixtures")]
    root: PathBuf,
    /// Scratch directory for the replayed run.
    #[arg(long, default_value = "runs")]
    work_dir: PathBuf,
}

#[derive(Subcommand, Debug)]
enum FixturesAction {
    /// Regenerate transcripts and golden files with the offline author.
    Record(FixtureOpts),
    /// Replay the fixture pipeline and diff against golden files.
    Verify(FixtureOpts),
}

/// Invalid run configuration or provider setup.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Failure carrying a machine-readable kind for the error tail.
struct Failure {
    kind: String,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let kind = if let Some(e) = error.downcast_ref::<PipelineError>() {
            e.kind()
        } else if let Some(e) = error.downcast_ref::<FixtureError>() {
            e.kind()
        } else if error.downcast_ref::<ConfigError>().is_some() {
            "ConfigError"
        } else {
            "Error"
        };
        Failure {
            kind: kind.to_string(),
            error,
        }
    }
}

fn prompts(global: &Global) -> Result<PromptSet> {
    match &global.prompts_dir {
        Some(d) => PromptSet::load_dir(d).with_context(|| format!("loading prompts from {}", d.display())),
        None => Ok(PromptSet::builtin()),
    }
}

fn load_config(global: &Global) -> Result<(RunConfig, PathBuf)> {
    let cwd = std::env::current_dir()?;
    let (mut cfg, base) = match &global.config {
        Some(p) => {
            let cfg = RunConfig::load(p).map_err(ConfigError)?;
            let base = p.parent().map(|d| cwd.join(d)).unwrap_or_else(|| cwd.clone());
            (cfg, base)
        }
        None => (RunConfig::default(), cwd),
    };
    if let Some(s) = global.seed {
        cfg.seed = s;
    }
    if let Some(c) = global.concurrency {
        cfg.concurrency = c;
    }
    if let Some(r) = &global.run_id {
        cfg.run_id = r.clone();
    }
    if let Some(p) = &global.provider {
        cfg.provider = p.clone();
    }
    Ok((cfg, base))
}

fn uses_llm(stage: Stage) -> bool {
    !matches!(stage, Stage::Ingest | Stage::Segment | Stage::TasksBuild | Stage::Report)
}

fn client(global: &Global, cfg: &RunConfig, keys: &AnswerKeyChannel, offline: bool) -> Result<LlmClient> {
    let cache = TranscriptCache::new(&global.cache_dir);
    let client = if global.replay_only || offline {
        LlmClient::replay(&cfg.provider, cache)
    } else if cfg.provider == FIXTURE_PROVIDER {
        LlmClient::new(Arc::new(FixtureAuthor::new(keys.clone(), cfg.seed))).with_cache(cache)
    } else {
        let providers = ProvidersConfig::load(&global.providers_file).map_err(ConfigError)?;
        let entry = providers
            .get(&cfg.provider)
            .ok_or_else(|| ConfigError(format!("provider `{}` not found in {}", cfg.provider, global.providers_file.display())))?;
        LlmClient::new(Arc::new(OpenAiCompatProvider::new(entry.clone()))).with_cache(cache)
    };
    Ok(client.with_concurrency(cfg.concurrency))
}

fn apply_task_opts(cfg: &mut RunConfig, o: &TaskOpts) {
    if !o.kinds.is_empty() {
        cfg.tasks.kinds = o.kinds.clone();
    }
    if let Some(n) = o.instances {
        cfg.tasks.instances = n;
    }
    if let Some(m) = o.t2_mode {
        cfg.tasks.t2_mode = m;
    }
    if let Some(n) = o.t4_options {
        cfg.tasks.t4_options = n;
    }
    if o.n_grammars.is_some() {
        cfg.tasks.n_grammars = o.n_grammars;
    }
    if o.n_sentences.is_some() {
        cfg.tasks.n_sentences = o.n_sentences;
    }
    if !o.models.is_empty() {
        cfg.models = o.models.clone();
    }
}

fn print_summary(s: &StageSummary) {
    println!("{}: {}", s.stage, s.note);
    for o in &s.outputs {
        println!("  {o}");
    }
}

fn run_fixtures(action: &FixturesAction, global: &Global) -> Result<()> {
    let prompts = prompts(global)?;
    match action {
        FixturesAction::Record(o) => {
            let r = fixtures::record(&o.root, &prompts, &o.work_dir)?;
            println!("recorded {} transcripts and {} golden files", r.transcripts, r.golden_files);
        }
        FixturesAction::Verify(o) => match fixtures::verify(&o.root, &prompts, &o.work_dir) {
            Ok(r) => println!("fixtures verified: {r}"),
            Err(FixtureError::GoldenMismatch(ms)) => {
                for m in &ms {
                    eprintln!("stage {}: {}\n{}", m.stage, m.file, m.diff);
                }
                return Err(FixtureError::GoldenMismatch(ms).into());
            }
            Err(e) => return Err(e.into()),
        },
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let global = &cli.global;
    if let Command::Fixtures { action } = &cli.command {
        return run_fixtures(action, global);
    }
    let (mut cfg, base) = load_config(global)?;

    let stages: Vec<Stage> = match &cli.command {
        Command::Ingest { source } => {
            if let Some(s) = source {
                cfg.ingest.source = std::env::current_dir()?.join(s);
            }
            vec![Stage::Ingest]
        }
        Command::Segment => vec![Stage::Segment],
        Command::Extract => vec![Stage::Extract],
        Command::Generate => vec![Stage::Generate],
        Command::Backcheck { min_score, require_rule } => {
            if let Some(m) = min_score {
                cfg.backcheck.min_score = *m;
            }
            if let Some(r) = require_rule {
                cfg.backcheck.require_rule = *r;
            }
            vec![Stage::Backcheck]
        }
        Command::Pairs => vec![Stage::Pairs],
        Command::Tasks { action } => match action {
            TasksAction::Build(o) => {
                apply_task_opts(&mut cfg, o);
                vec![Stage::TasksBuild]
            }
            TasksAction::Run(o) => {
                apply_task_opts(&mut cfg, o);
                vec![Stage::TasksRun]
            }
            TasksAction::Sweep { opts, options } => {
                apply_task_opts(&mut cfg, opts);
                if !options.is_empty() {
                    cfg.tasks.sweep_options = options.clone();
                }
                if !opts.kinds.is_empty() {
                    cfg.tasks.sweep_kinds = opts.kinds.clone();
                }
                vec![Stage::TasksSweep]
            }
        },
        Command::Translate { models } => {
            if !models.is_empty() {
                cfg.models = models.clone();
            }
            vec![Stage::Translate]
        }
        Command::Score { metrics, vocab, models, files } => {
            if !metrics.is_empty() {
                cfg.score.metrics = metrics.clone();
            }
            if let (Some(hyp), Some(reference)) = (&files.hyp, &files.reference) {
                let job = score_files::FileScoring {
                    hyp: hyp.clone(),
                    reference: reference.clone(),
                    src: files.src.clone(),
                    external: files.external.clone(),
                    vocab: vocab.clone(),
                    metrics: cfg.score.metrics.clone(),
                    judge_model: cfg.score.judge_model.clone(),
                    direction: cfg.translate.direction,
                    model_id: files.model_id.clone(),
                    out: files.out.clone(),
                };
                let client = if job.metrics.contains(&MetricKind::Judge) {
                    Some(client(global, &cfg, &AnswerKeyChannel::new(), false)?)
                } else {
                    None
                };
                return score_files::run(&job, client.as_ref(), &prompts(global)?);
            }
            if let Some(v) = vocab {
                cfg.score.vocab = Some(std::env::current_dir()?.join(v));
            }
            if !models.is_empty() {
                cfg.models = models.clone();
            }
            vec![Stage::Score]
        }
        Command::Report { .. } => vec![Stage::Report],
        Command::Validate { dir } => {
            let dir = dir.clone().unwrap_or_else(|| global.runs_dir.join(&cfg.run_id));
            let ds = Dataset::load(&dir)?;
            let report = validate(&ds, &cfg.backcheck.policy());
            println!("{}", report.summary_line());
            let hist: Vec<String> = report
                .verified_pairs_per_point
                .iter()
                .map(|(k, n)| format!("{k}:{n}"))
                .collect();
            println!("verified_pairs_per_point {}", hist.join(" "));
            if !report.is_valid() {
                for v in &report.violations {
                    eprintln!("violation: {v}");
                }
                return Err(anyhow!("{} schema violations", report.violations.len()));
            }
            return Ok(());
        }
        Command::Pipeline => Vec::new(),
        Command::Fixtures { .. } => unreachable!("handled above"),
    };

    let keys = AnswerKeyChannel::new();
    let offline = !stages.is_empty() && !stages.iter().copied().any(uses_llm);
    let client = client(global, &cfg, &keys, offline)?;
    let mut pipeline = Pipeline::new(cfg, &global.runs_dir, &base, client.clone(), prompts(global)?)?;
    if pipeline.config.provider == FIXTURE_PROVIDER && !global.replay_only {
        pipeline = pipeline.with_answer_keys(keys);
    }
    if let Command::Report { out: Some(out) } = &cli.command {
        let bundle = export_report(&pipeline.report_input()?)?;
        bundle.write_to(out)?;
        for name in bundle.files.keys() {
            println!("{}", out.join(name).display());
        }
        return Ok(());
    }
    let stages = if stages.is_empty() { pipeline.plan() } else { stages };
    for stage in stages {
        print_summary(&pipeline.run_stage(stage)?);
    }
    let c = client.counters();
    log::info!(
        "upstream calls {}, cache hits {}, replay misses {}",
        c.upstream(),
        c.hits(),
        c.misses()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.global.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let f = Failure::from(e);
            eprintln!("error: {:#}", f.error);
            eprintln!("{}", json!({ "error": { "kind": f.kind, "message": format!("{:#}", f.error) } }));
            ExitCode::from(1)
        }
    }
}
