use super::{paths, Pipeline, PipelineError, Stage, StageSummary};
use crate::atelier::{
    chapter_sentences, dedupe_points, extract_grammar_points, generate_pairs, row_contexts,
    slide_windows, ExamplePair, ExtractConfig, GenerateConfig, GrammarPoint, LengthBand,
    PairStatus, SentenceSplitter, Unit,
};
use crate::dataset::{
    Dataset, DatasetManifest, MINIMAL_PAIRS_FILE, PAIRS_FILE, POINTS_FILE, VERDICTS_FILE,
};
use crate::forge::{backcheck_pair, filter_verified, forge_minimal_pair, ForgeConfig, ForgeError};
use crate::inspector::{
    classify_sections, grammar_sections, parse_interchange, segment_chapters, Chapter, KeywordMap,
    SourceDocument,
};
use crate::jsonl::{read_jsonl, upsert_by_key, write_atomic, write_jsonl};
use crate::metrics::{
    bridge_records, judge_corpus, read_external_scores, score_corpus, segments_from_pairs,
    translate_corpus, BleuTokenizer, Hypothesis, JudgeConfig, JudgeScore, MetricKind,
    ScoreRequest, ScoreRow, Segment, SubwordVocab, TranslateConfig,
};
use crate::num::{mean, population_std};
use crate::parallel::bounded_map;
use crate::proofstand::{
    build_tasks, option_sweep, register_answer_keys, run_tasks, score_tasks, RunOptions,
    SweepReport, T2Mode, TaskConfig, TaskInstance, TaskKind, TaskResult,
};
use crate::stats::{export_report, MetricCell, ReportInput};
use serde::de::DeserializeOwned;
use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

fn summary(stage: Stage, outputs: Vec<String>, note: String) -> StageSummary {
    StageSummary {
        stage,
        outputs,
        note,
    }
}

impl Pipeline {
    fn path(&self, rel: &str) -> PathBuf {
        self.run_dir.join(rel)
    }

    fn require<T: DeserializeOwned>(&self, stage: Stage, rel: &str) -> Result<Vec<T>, PipelineError> {
        let path = self.path(rel);
        if !path.exists() {
            return Err(PipelineError::MissingInput {
                stage,
                missing: rel.to_string(),
            });
        }
        Ok(read_jsonl(&path)?)
    }

    fn document(&self, stage: Stage) -> Result<SourceDocument, PipelineError> {
        let path = self.path(paths::DOCUMENT);
        if !path.exists() {
            return Err(PipelineError::MissingInput {
                stage,
                missing: paths::DOCUMENT.into(),
            });
        }
        Ok(parse_interchange(&path)?)
    }

    fn dataset(&self) -> Result<Dataset, PipelineError> {
        Ok(Dataset::load(&self.run_dir)?)
    }

    fn write<T: serde::Serialize>(&self, rel: &str, records: &[T]) -> Result<String, PipelineError> {
        write_jsonl(&self.path(rel), records)?;
        Ok(rel.to_string())
    }

    pub(super) fn ingest(&self) -> Result<StageSummary, PipelineError> {
        let doc = parse_interchange(&self.resolve(&self.config.ingest.source))?;
        write_atomic(&self.path(paths::DOCUMENT), doc.to_json().as_bytes())?;
        Ok(summary(
            Stage::Ingest,
            vec![paths::DOCUMENT.into()],
            format!("{} blocks, {} tables", doc.blocks.len(), doc.tables.len()),
        ))
    }

    pub(super) fn segment(&self) -> Result<StageSummary, PipelineError> {
        let doc = self.document(Stage::Segment)?;
        let chapters = classify_sections(
            &segment_chapters(&doc, self.config.segment.heading_ratio),
            &KeywordMap::default(),
        );
        let grammar = grammar_sections(&chapters, self.config.segment.include_lexicon)?;
        let out = self.write(paths::CHAPTERS, &chapters)?;
        Ok(summary(
            Stage::Segment,
            vec![out],
            format!("{} chapters, {} grammar sections", chapters.len(), grammar.len()),
        ))
    }

    fn units(&self, doc: &SourceDocument, grammar: &[Chapter]) -> Vec<Unit> {
        let c = &self.config.extract;
        let splitter = SentenceSplitter::default();
        let mut units = Vec::new();
        for ch in grammar {
            let sentences = chapter_sentences(ch, doc, &splitter);
            units.extend(slide_windows(ch, &sentences, c.window, c.stride).into_iter().map(Unit::Window));
            for t in doc
                .tables
                .iter()
                .filter(|t| (ch.block_range.0..ch.block_range.1).contains(&t.anchor_block))
            {
                units.extend(
                    row_contexts(t, doc, c.context_budget, &splitter)
                        .into_iter()
                        .map(Unit::Row),
                );
            }
        }
        units
    }

    pub(super) fn extract(&self) -> Result<StageSummary, PipelineError> {
        let doc = self.document(Stage::Extract)?;
        let chapters: Vec<Chapter> = self.require(Stage::Extract, paths::CHAPTERS)?;
        let grammar = grammar_sections(&chapters, self.config.segment.include_lexicon)?;
        let units = self.units(&doc, &grammar);
        let cfg = ExtractConfig {
            languages: self.config.languages.clone(),
            ..ExtractConfig::new(&self.config.extract.model)
        };
        let found = bounded_map(&units, self.config.concurrency, |_, u| {
            extract_grammar_points(u, &self.client, &self.prompts, &cfg)
        });
        let mut raw = Vec::new();
        for r in found {
            raw.extend(r?);
        }
        let points = dedupe_points(&raw, self.config.extract.dedup_threshold);
        let out = self.write(POINTS_FILE, &points)?;
        Ok(summary(
            Stage::Extract,
            vec![out],
            format!("{} units, {} raw points, {} after dedupe", units.len(), raw.len(), points.len()),
        ))
    }

    pub(super) fn generate(&self) -> Result<StageSummary, PipelineError> {
        let points: Vec<GrammarPoint> = self.require(Stage::Generate, POINTS_FILE)?;
        let g = &self.config.generate;
        let cfg = GenerateConfig {
            count: g.count,
            length: LengthBand {
                min: g.min_words,
                max: g.max_words,
            },
            languages: self.config.languages.clone(),
            ..GenerateConfig::new(&g.model)
        };
        let outcomes = bounded_map(&points, self.config.concurrency, |_, gp| {
            generate_pairs(gp, &self.client, &self.prompts, &cfg)
        });
        let mut fresh = Vec::new();
        let mut rejects = 0;
        for o in outcomes {
            let o = o?;
            rejects += o.rejects.len();
            fresh.extend(o.pairs);
        }
        let order: Vec<String> = fresh.iter().map(|p| p.pair_id.clone()).collect();
        let pairs = upsert_by_key(Vec::new(), fresh, |p: &ExamplePair| p.pair_id.clone(), &order);
        let out = self.write(PAIRS_FILE, &pairs)?;
        Ok(summary(
            Stage::Generate,
            vec![out],
            format!("{} pairs for {} points, {rejects} malformed items", pairs.len(), points.len()),
        ))
    }

    pub(super) fn backcheck(&self) -> Result<StageSummary, PipelineError> {
        let points: Vec<GrammarPoint> = self.require(Stage::Backcheck, POINTS_FILE)?;
        let mut pairs: Vec<ExamplePair> = self.require(Stage::Backcheck, PAIRS_FILE)?;
        for p in &mut pairs {
            p.status = PairStatus::Unchecked;
        }
        let index: HashMap<&str, &GrammarPoint> = points.iter().map(|g| (g.gp_id.as_str(), g)).collect();
        let cfg = ForgeConfig {
            languages: self.config.languages.clone(),
            ..ForgeConfig::new(&self.config.backcheck.model)
        };
        let verdicts = bounded_map(&pairs, self.config.concurrency, |_, p| {
            let gp = p
                .gp_ids
                .first()
                .and_then(|id| index.get(id.as_str()))
                .ok_or_else(|| ForgeError::Precondition(format!("pair {} names no known grammar point", p.pair_id)))?;
            backcheck_pair(p, gp, &self.client, &self.prompts, &cfg)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        let outcome = filter_verified(&pairs, &verdicts, &self.config.backcheck.policy())?;
        let status: HashMap<&str, PairStatus> = outcome
            .verified
            .iter()
            .chain(&outcome.rejected)
            .map(|p| (p.pair_id.as_str(), p.status))
            .collect();
        let checked: Vec<ExamplePair> = pairs
            .iter()
            .map(|p| ExamplePair {
                status: status[p.pair_id.as_str()],
                ..p.clone()
            })
            .collect();
        let outputs = vec![self.write(PAIRS_FILE, &checked)?, self.write(VERDICTS_FILE, &verdicts)?];
        Ok(summary(
            Stage::Backcheck,
            outputs,
            format!(
                "{} verified, {} rejected, retention {:.4}",
                outcome.verified.len(),
                outcome.rejected.len(),
                outcome.retention()
            ),
        ))
    }

    pub(super) fn forge_pairs(&self) -> Result<StageSummary, PipelineError> {
        let ds = self.dataset()?;
        if ds.verdicts.is_empty() {
            return Err(PipelineError::MissingInput {
                stage: Stage::Pairs,
                missing: VERDICTS_FILE.into(),
            });
        }
        let index = ds.point_index();
        let verified: Vec<&ExamplePair> = ds.verified_pairs().collect();
        let cfg = ForgeConfig {
            languages: self.config.languages.clone(),
            ..ForgeConfig::new(&self.config.forge.model)
        };
        let forged = bounded_map(&verified, self.config.concurrency, |_, p| {
            let gp = p
                .gp_ids
                .first()
                .and_then(|id| index.get(id.as_str()))
                .ok_or_else(|| ForgeError::Precondition(format!("pair {} names no known grammar point", p.pair_id)))?;
            forge_minimal_pair(p, gp, &self.client, &self.prompts, &cfg)
        });
        let mut mps = Vec::new();
        let mut skipped = 0;
        for r in forged {
            match r {
                Ok(mp) => mps.push(mp),
                Err(ForgeError::DegenerateContrast { pair_id }) => {
                    log::warn!("pair {pair_id}: ungrammatical variant equals the original; skipped");
                    skipped += 1;
                }
                Err(e) => return Err(e.into()),
            }
        }
        let out = self.write(MINIMAL_PAIRS_FILE, &mps)?;
        Ok(summary(
            Stage::Pairs,
            vec![out],
            format!("{} minimal pairs, {skipped} degenerate", mps.len()),
        ))
    }

    fn task_config(&self, kind: TaskKind) -> TaskConfig {
        let t = &self.config.tasks;
        let base = TaskConfig::base(kind, self.config.seed, t.instances);
        TaskConfig {
            t2_mode: t.t2_mode,
            t4_options: t.t4_options,
            n_grammars: t.n_grammars.unwrap_or(base.n_grammars),
            n_sentences: t.n_sentences.unwrap_or(base.n_sentences),
            ..base
        }
    }

    pub(super) fn tasks_build(&self) -> Result<StageSummary, PipelineError> {
        let ds = self.dataset()?;
        let mut outputs = Vec::new();
        let mut counts = Vec::new();
        for &kind in &self.config.tasks.kinds {
            let instances = build_tasks(&ds, &self.task_config(kind))?;
            counts.push(format!("{kind}={}", instances.len()));
            outputs.push(self.write(&paths::tasks(kind), &instances)?);
        }
        Ok(summary(Stage::TasksBuild, outputs, counts.join(" ")))
    }

    pub(super) fn tasks_run(&self) -> Result<StageSummary, PipelineError> {
        let mut outputs = Vec::new();
        let mut notes = Vec::new();
        for &kind in &self.config.tasks.kinds {
            let instances: Vec<TaskInstance> = self.require(Stage::TasksRun, &paths::tasks(kind))?;
            if let Some(ch) = &self.keys {
                register_answer_keys(&instances, &self.prompts, ch)?;
            }
            for model in &self.config.models {
                let rel = paths::results(model, kind);
                let opts = RunOptions {
                    model_id: model.clone(),
                    results_path: Some(self.path(&rel)),
                };
                let results = run_tasks(&instances, &self.client, &self.prompts, &opts)?;
                let report = score_tasks(&results, self.config.seed)?;
                notes.push(format!("{model} {kind} acc={:.4}", report.accuracy));
                outputs.push(rel);
            }
        }
        Ok(summary(Stage::TasksRun, outputs, notes.join("; ")))
    }

    pub(super) fn tasks_sweep(&self) -> Result<StageSummary, PipelineError> {
        let t = &self.config.tasks;
        if t.sweep_options.is_empty() {
            return Err(PipelineError::Config("tasks.sweep_options is empty".into()));
        }
        let ds = self.dataset()?;
        let mut outputs = Vec::new();
        for &kind in &t.sweep_kinds {
            let mut base = self.task_config(kind);
            if kind == TaskKind::T2 {
                base.t2_mode = T2Mode::Select;
            }
            for model in &self.config.models {
                let report = option_sweep(
                    &ds,
                    &base,
                    &t.sweep_options,
                    &self.client,
                    &self.prompts,
                    model,
                    self.keys.as_ref(),
                    Some(&self.path(paths::sweep_dir())),
                )?;
                for &n in &t.sweep_options {
                    outputs.push(paths::sweep_results(model, kind, n));
                }
                let json = serde_json::to_string_pretty(&report).expect("sweep serializes") + "\n";
                write_atomic(&self.path(&paths::sweep_report(model, kind)), json.as_bytes())?;
                write_atomic(&self.path(&paths::sweep_tsv(model, kind)), report.to_tsv().as_bytes())?;
                outputs.push(paths::sweep_report(model, kind));
                outputs.push(paths::sweep_tsv(model, kind));
            }
        }
        Ok(summary(
            Stage::TasksSweep,
            outputs,
            format!("option counts {:?}", t.sweep_options),
        ))
    }

    fn segments(&self) -> Result<Vec<Segment>, PipelineError> {
        let dir = self.config.translate.direction;
        match &self.config.translate.manifest {
            Some(m) => {
                let path = self.resolve(m);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
                let manifest = DatasetManifest::from_toml(&text).map_err(PipelineError::Config)?;
                let base = path.parent().map(PathBuf::from).unwrap_or_default();
                Ok(manifest.segments(&base, dir)?)
            }
            None => {
                let ds = self.dataset()?;
                let verified: Vec<ExamplePair> = ds.verified_pairs().cloned().collect();
                if verified.is_empty() {
                    return Err(PipelineError::MissingInput {
                        stage: Stage::Translate,
                        missing: "verified pairs".into(),
                    });
                }
                Ok(segments_from_pairs(&verified, dir))
            }
        }
    }

    pub(super) fn translate(&self) -> Result<StageSummary, PipelineError> {
        let segments = self.segments()?;
        let mut outputs = vec![self.write(paths::SEGMENTS, &segments)?];
        for model in &self.config.models {
            let cfg = TranslateConfig {
                model: model.clone(),
                direction: self.config.translate.direction,
            };
            let hyps = translate_corpus(&segments, &self.client, &self.prompts, &cfg).map_err(|f| f.error)?;
            outputs.push(self.write(&paths::hypotheses(model), &hyps)?);
            outputs.push(self.write(&paths::bridge(model), &bridge_records(&segments, &hyps)?)?);
        }
        Ok(summary(
            Stage::Translate,
            outputs,
            format!("{} segments x {} models", segments.len(), self.config.models.len()),
        ))
    }

    pub(super) fn score(&self) -> Result<StageSummary, PipelineError> {
        let segments: Vec<Segment> = self.require(Stage::Score, paths::SEGMENTS)?;
        let s = &self.config.score;
        let tokenizer = match &s.vocab {
            Some(v) => BleuTokenizer::Subword(SubwordVocab::load(&self.resolve(v))?),
            None => BleuTokenizer::Words,
        };
        let mut outputs = Vec::new();
        let mut notes = Vec::new();
        for model in &self.config.models {
            let hyps: Vec<Hypothesis> = self.require(Stage::Score, &paths::hypotheses(model))?;
            let mut req = ScoreRequest::new(s.metrics.iter().copied());
            req.tokenizer = tokenizer.clone();
            if req.metrics.contains(&MetricKind::Judge) {
                let cfg = JudgeConfig::new(&s.judge_model, self.config.translate.direction);
                let judged: Vec<JudgeScore> = judge_corpus(&segments, &hyps, &self.client, &self.prompts, &cfg)?;
                outputs.push(self.write(&paths::judge_scores(model), &judged)?);
                req.judge = Some(judged);
            }
            if req.metrics.contains(&MetricKind::External) {
                let rel = paths::external_scores(model);
                req.external = Some(read_external_scores(&self.path(&rel))?.ok_or(
                    PipelineError::MissingInput {
                        stage: Stage::Score,
                        missing: rel,
                    },
                )?);
            }
            let scores = score_corpus::<f64>(&segments, &hyps, &req)?;
            for (m, a) in &scores.aggregates {
                notes.push(format!("{model} {}={:.4}", m.name(), a.mean));
            }
            outputs.push(self.write(&paths::scores(model), &scores.to_rows(model))?);
        }
        Ok(summary(Stage::Score, outputs, notes.join("; ")))
    }

    /// Report inputs gathered from the result, score and sweep files that
    /// exist for the configured models.
    pub fn report_input(&self) -> Result<ReportInput, PipelineError> {
        let mut input = ReportInput {
            tasks: Vec::new(),
            metrics: Vec::new(),
            sweeps: Vec::new(),
        };
        for model in &self.config.models {
            for &kind in &self.config.tasks.kinds {
                let path = self.path(&paths::results(model, kind));
                if path.exists() {
                    let results: Vec<TaskResult> = read_jsonl(&path)?;
                    input.tasks.push(score_tasks(&results, self.config.seed)?.cell());
                }
            }
            let path = self.path(&paths::scores(model));
            if path.exists() {
                let rows: Vec<ScoreRow> = read_jsonl(&path)?;
                let mut by_metric: BTreeMap<MetricKind, Vec<f64>> = BTreeMap::new();
                for r in rows {
                    by_metric.entry(r.metric).or_default().push(r.value);
                }
                for (metric, values) in by_metric {
                    input.metrics.push(MetricCell {
                        model_id: model.clone(),
                        metric: metric.name().to_string(),
                        mean: mean(&values).unwrap_or(f64::NAN),
                        std: population_std(&values).unwrap_or(f64::NAN),
                        n: values.len(),
                    });
                }
            }
            for &kind in &self.config.tasks.sweep_kinds {
                let path = self.path(&paths::sweep_report(model, kind));
                if path.exists() {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| PipelineError::Manifest(format!("{}: {e}", path.display())))?;
                    let report: SweepReport = serde_json::from_str(&text)
                        .map_err(|e| PipelineError::Manifest(format!("{}: {e}", path.display())))?;
                    input.sweeps.push(report.curve());
                }
            }
        }
        Ok(input)
    }

    pub(super) fn report(&self) -> Result<StageSummary, PipelineError> {
        let input = self.report_input()?;
        if input.tasks.is_empty() && input.metrics.is_empty() {
            return Err(PipelineError::MissingInput {
                stage: Stage::Report,
                missing: "task results or scores".into(),
            });
        }
        let bundle = export_report(&input)?;
        let dir = self.path(paths::REPORT_DIR);
        bundle.write_to(&dir)?;
        let outputs = bundle
            .files
            .keys()
            .map(|name| format!("{}/{name}", paths::REPORT_DIR))
            .collect();
        Ok(summary(
            Stage::Report,
            outputs,
            format!("{} task cells, {} metric cells", input.tasks.len(), input.metrics.len()),
        ))
    }
}
