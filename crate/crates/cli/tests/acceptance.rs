//! Acceptance gate. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

#[path = "../../core/tests/oracles/mod.rs"]
#[allow(dead_code)]
mod oracles;

use gramprobe::atelier::PairStatus;
use gramprobe::dataset::{validate, Dataset};
use gramprobe::fixtures::{self, retention_dataset, synthetic_dataset, tree_files, GOLDEN_DIR};
use gramprobe::forge::{filter_verified, FilterPolicy};
use gramprobe::llm::{AnswerKeyChannel, LlmClient, MockProvider};
use gramprobe::metrics::{bleu, chrf_pp, BleuParams, ChrfParams};
use gramprobe::proofstand::{
    build_tasks, register_answer_keys, run_tasks, score_tasks, sweep_config, RunOptions, T2Mode,
    TaskConfig, TaskKind, TaskReport,
};
use gramprobe::stats::{binomial_std, bootstrap_std, correlation_matrix, spearman, Method, ModelRow};
use gramprobe::template::PromptSet;
use oracles::{bleu_oracle, chrf_oracle, rel_close};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixtures_root() -> PathBuf {
    repo_root().join("fixtures")
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < budget, || format!("took {took:?}, budget {budget:?}"))
}

fn random_sentence(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'c', 'd', 'e', 'é', 'ë', 'n', '.', ',', '!', '\''];
    let words = rng.gen_range(1..9);
    (0..words)
        .map(|_| {
            let len = rng.gen_range(1..7);
            (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect::<String>()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn ws(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for i in 0..1000 {
        let (h, r) = (random_sentence(&mut rng), random_sentence(&mut rng));
        let c: f64 = chrf_pp(&h, &r, &ChrfParams::default()).map_err(|e| e.to_string())?;
        let co = chrf_oracle(&h, &r);
        ensure(rel_close(c, co, 1e-9), || format!("pair {i} chrF++ {h:?}/{r:?}: {c} vs {co}"))?;
        let b: f64 = bleu(&ws(&h), &ws(&r), &BleuParams::default()).map_err(|e| e.to_string())?;
        let bo = bleu_oracle(&ws(&h), &ws(&r), true);
        ensure(rel_close(b, bo, 1e-9), || format!("pair {i} BLEU {h:?}/{r:?}: {b} vs {bo}"))?;
    }
    for i in 0..100 {
        let s = random_sentence(&mut rng);
        let c: f64 = chrf_pp(&s, &s, &ChrfParams::default()).map_err(|e| e.to_string())?;
        let b: f64 = bleu(&ws(&s), &ws(&s), &BleuParams::default()).map_err(|e| e.to_string())?;
        ensure(c == 100.0 && b == 100.0, || format!("identity {i} {s:?}: chrF++ {c}, BLEU {b}"))?;
    }
    within_budget(start, Duration::from_secs(10))?;
    Ok(format!("1000 pairs within 1e-9, 100 identities, {:?}", start.elapsed()))
}

fn run_kind(ds: &Dataset, cfg: &TaskConfig, client: &LlmClient, prompts: &PromptSet) -> Result<TaskReport, String> {
    let insts = build_tasks(ds, cfg).map_err(|e| e.to_string())?;
    ensure(insts.len() == cfg.instances, || format!("{} built {} of {} instances", cfg.kind, insts.len(), cfg.instances))?;
    let results = run_tasks(&insts, client, prompts, &RunOptions::new("probe")).map_err(|e| e.to_string())?;
    score_tasks(&results, 0).map_err(|e| e.to_string())
}

fn three_sigma(acc: f64, p: f64, n: usize) -> bool {
    (acc - p).abs() <= 3.0 * binomial_std(p, n)
}

fn chance_floors() -> Outcome {
    let start = Instant::now();
    const N: usize = 2000;
    let ds = synthetic_dataset(2000, 3);
    let prompts = PromptSet::builtin();
    let client = LlmClient::new(Arc::new(MockProvider::uniform_random("random", 7))).with_concurrency(8);
    let mut cells = Vec::new();
    for kind in [TaskKind::T1, TaskKind::T2, TaskKind::T4] {
        for n in [2, 4, 6, 8, 10] {
            let cfg = sweep_config(&TaskConfig::base(kind, 100 + n as u64, N), n).map_err(|e| e.to_string())?;
            ensure(cfg.option_count() == n, || format!("{kind} n={n}: {} options", cfg.option_count()))?;
            let rep = run_kind(&ds, &cfg, &client, &prompts)?;
            let p = 1.0 / n as f64;
            ensure(three_sigma(rep.accuracy, p, N), || format!("{kind} n={n}: {:.4} vs {p:.4}", rep.accuracy))?;
            cells.push(format!("{}/{n}={:.3}", kind.number(), rep.accuracy));
        }
    }
    let rep = run_kind(&ds, &TaskConfig::base(TaskKind::T3, 300, N), &client, &prompts)?;
    ensure(three_sigma(rep.accuracy, 1.0 / 6.0, N), || format!("task3: {:.4} vs 1/6", rep.accuracy))?;
    cells.push(format!("3={:.3}", rep.accuracy));
    within_budget(start, Duration::from_secs(60))?;
    Ok(format!("{} in {:?}", cells.join(" "), start.elapsed()))
}

fn oracle_ceiling() -> Outcome {
    const N: usize = 2000;
    let ds = synthetic_dataset(400, 3);
    let prompts = PromptSet::builtin();
    let mut out = Vec::new();
    let configs = [
        TaskConfig::base(TaskKind::T1, 1, N),
        TaskConfig::base(TaskKind::T2, 2, N),
        TaskConfig { t2_mode: T2Mode::Judge, ..TaskConfig::base(TaskKind::T2, 3, N) },
        TaskConfig::base(TaskKind::T3, 4, N),
        TaskConfig::base(TaskKind::T4, 5, N),
    ];
    for cfg in configs {
        let insts = build_tasks(&ds, &cfg).map_err(|e| e.to_string())?;
        let keys = AnswerKeyChannel::new();
        register_answer_keys(&insts, &prompts, &keys).map_err(|e| e.to_string())?;
        for flip in [0.0, 0.2] {
            let client = LlmClient::new(Arc::new(MockProvider::oracle("oracle", keys.clone(), flip, 9))).with_concurrency(8);
            let results = run_tasks(&insts, &client, &prompts, &RunOptions::new("oracle")).map_err(|e| e.to_string())?;
            let acc = score_tasks(&results, 0).map_err(|e| e.to_string())?.accuracy;
            if flip == 0.0 {
                ensure(acc == 1.0, || format!("{} exact oracle scored {acc}", cfg.kind))?;
            } else {
                ensure(three_sigma(acc, 0.8, insts.len()), || format!("{} flip 0.2 scored {acc:.4}", cfg.kind))?;
                out.push(format!("{}:{:.3}", cfg.kind.number(), acc));
            }
        }
    }
    Ok(format!("exact oracle 1.0 on all kinds; flip 0.2 gives {}", out.join(" ")))
}

fn end_to_end_determinism() -> Outcome {
    let prompts = PromptSet::builtin();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ra = fixtures::verify(&fixtures_root(), &prompts, a.path()).map_err(|e| e.to_string())?;
    let rb = fixtures::verify(&fixtures_root(), &prompts, b.path()).map_err(|e| e.to_string())?;
    ensure(ra.replay_misses == 0 && rb.replay_misses == 0, || "replay misses".into())?;
    ensure(ra.upstream_calls == 0 && rb.upstream_calls == 0, || "upstream calls during replay".into())?;
    let files = tree_files(&ra.run_dir).map_err(|e| e.to_string())?;
    ensure(files == tree_files(&rb.run_dir).map_err(|e| e.to_string())?, || "file sets differ".into())?;
    for rel in &files {
        let x = fs::read(ra.run_dir.join(rel)).map_err(|e| e.to_string())?;
        let y = fs::read(rb.run_dir.join(rel)).map_err(|e| e.to_string())?;
        ensure(x == y, || format!("{rel} differs between runs"))?;
    }
    Ok(format!("{} files identical across two replays and golden; 0 replay misses", files.len()))
}

fn statistics() -> Outcome {
    let data = [
        [0.92, 0.81, 0.55, 0.61, 48.2],
        [0.71, 0.64, 0.31, 0.58, 39.9],
        [0.88, 0.79, 0.42, 0.66, 51.7],
        [0.55, 0.52, 0.20, 0.51, 22.4],
        [0.80, 0.70, 0.47, 0.60, 44.0],
    ];
    let pearson_expected = [
        [1.0, 0.9966107240521411, 0.939473377773017, 0.9051544274464137, 0.9620756632893335],
        [0.9966107240521411, 1.0, 0.9135678796519238, 0.9151818145198821, 0.958651474534082],
        [0.939473377773017, 0.9135678796519238, 1.0, 0.7384113787157408, 0.8502082741391744],
        [0.9051544274464137, 0.9151818145198821, 0.7384113787157408, 1.0, 0.9714309405481205],
        [0.9620756632893335, 0.958651474534082, 0.8502082741391744, 0.9714309405481205, 1.0],
    ];
    let spearman_expected = [
        [1.0, 1.0, 0.9, 0.9, 0.9],
        [1.0, 1.0, 0.9, 0.9, 0.9],
        [0.9, 0.9, 1.0, 0.7, 0.7],
        [0.9, 0.9, 0.7, 1.0, 1.0],
        [0.9, 0.9, 0.7, 1.0, 1.0],
    ];
    let labels = ["task1", "task2", "task3", "task4", "chrfpp"];
    let rows: Vec<ModelRow<f64>> = data
        .iter()
        .enumerate()
        .map(|(i, r)| ModelRow::new(&format!("m{i}"), labels.iter().zip(r).map(|(l, v)| (l.to_string(), *v)).collect()))
        .collect();
    for (method, expected) in [(Method::Pearson, pearson_expected), (Method::Spearman, spearman_expected)] {
        let m = correlation_matrix(&rows, method).map_err(|e| e.to_string())?;
        for i in 0..5 {
            for j in 0..5 {
                let got = m.values[i][j].ok_or_else(|| format!("{method} {i},{j} missing"))?;
                ensure((got - expected[i][j]).abs() <= 1e-12, || format!("{method} {i},{j}: {got} vs {}", expected[i][j]))?;
                ensure(m.values[i][j] == m.values[j][i], || format!("{method} not symmetric at {i},{j}"))?;
            }
            ensure(m.values[i][i] == Some(1.0), || format!("{method} diagonal {i}"))?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..100 {
        let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..10).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let tx: Vec<f64> = x.iter().map(|v: &f64| v.exp() + v.powi(3)).collect();
        let (a, b) = (spearman(&x, &y).map_err(|e| e.to_string())?, spearman(&tx, &y).map_err(|e| e.to_string())?);
        ensure(a == b, || format!("vector {k}: spearman {a} vs {b} after monotone transform"))?;
    }

    let ones = vec![true; 1000];
    let s0: f64 = bootstrap_std(&ones, 1000, 1).map_err(|e| e.to_string())?;
    ensure(s0 == 0.0, || format!("bootstrap std of all-ones is {s0}"))?;
    let half: Vec<bool> = (0..1000).map(|i| i % 2 == 0).collect();
    let s: f64 = bootstrap_std(&half, 1000, 1).map_err(|e| e.to_string())?;
    let closed = binomial_std(0.5, 1000);
    ensure((s - closed).abs() / closed <= 0.15, || format!("bootstrap {s} vs binomial {closed}"))?;
    Ok(format!("5x5 matrices within 1e-12; 100 monotone checks; bootstrap {s:.5} vs {closed:.5}"))
}

fn gramprobe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gramprobe"))
}

fn cli_validate(dir: &Path) -> Result<String, String> {
    let out = gramprobe().arg("validate").arg("--dir").arg(dir).output().map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    ensure(out.status.success(), || format!("validate {} failed: {}", dir.display(), String::from_utf8_lossy(&out.stderr)))?;
    Ok(stdout.lines().next().unwrap_or_default().to_string())
}

fn dataset_accounting() -> Outcome {
    let golden = fixtures_root().join(GOLDEN_DIR);
    let line = cli_validate(&golden)?;
    let expected = "points=6 pairs=24 verified=22 rejected=2 minimal_pairs=22 retention=0.9167 points_in_band=6/6";
    ensure(line == expected, || format!("golden validate: {line}"))?;
    let ds = Dataset::load(&golden).map_err(|e| e.to_string())?;
    let r = validate(&ds, &FilterPolicy::default());
    ensure(r.is_valid(), || format!("violations: {:?}", r.violations))?;
    let per_point: Vec<(usize, usize)> = r.verified_pairs_per_point.iter().map(|(k, v)| (*k, *v)).collect();
    ensure(per_point == [(3, 2), (4, 4)], || format!("pairs per point {per_point:?}"))?;

    let ret_line = cli_validate(&fixtures_root().join(fixtures::RETENTION_DIR))?;
    ensure(ret_line.contains("verified=94 rejected=6") && ret_line.contains("retention=0.9400"), || ret_line.clone())?;
    let ret = retention_dataset();
    let unchecked: Vec<_> = ret
        .pairs
        .iter()
        .cloned()
        .map(|mut p| {
            p.status = PairStatus::Unchecked;
            p
        })
        .collect();
    let outcome = filter_verified(&unchecked, &ret.verdicts, &FilterPolicy::default()).map_err(|e| e.to_string())?;
    ensure(outcome.retention() == 0.94, || format!("filter retention {}", outcome.retention()))?;
    Ok(format!("{line}; retention fixture 94/100 = {}", outcome.retention()))
}

fn transcript_rescoring() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = fixtures::load_config(&fixtures_root()).map_err(|e| e.to_string())?;
    let golden = fixtures_root().join(GOLDEN_DIR);
    let run_dir = tmp.path().join(&config.run_id);
    for rel in tree_files(&golden).map_err(|e| e.to_string())? {
        if rel.starts_with("results/") || rel.starts_with("scores/") || rel.starts_with("report/") {
            continue;
        }
        let dst = run_dir.join(&rel);
        fs::create_dir_all(dst.parent().unwrap()).map_err(|e| e.to_string())?;
        fs::copy(golden.join(&rel), dst).map_err(|e| e.to_string())?;
    }
    for args in [&["tasks", "run"][..], &["score"], &["report"]] {
        let out = gramprobe()
            .arg("--config")
            .arg(fixtures_root().join(fixtures::CONFIG_FILE))
            .arg("--runs-dir")
            .arg(tmp.path())
            .arg("--cache-dir")
            .arg(fixtures_root().join(fixtures::CACHE_DIR))
            .arg("--replay-only")
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
    }
    let mut checked = 0;
    for rel in tree_files(&golden).map_err(|e| e.to_string())? {
        if rel.starts_with("results/") || rel.starts_with("scores/") || rel.starts_with("report/") {
            let g = fs::read(golden.join(&rel)).map_err(|e| e.to_string())?;
            let r = fs::read(run_dir.join(&rel)).map_err(|e| format!("{rel}: {e}"))?;
            ensure(g == r, || format!("{rel} differs from the recorded bundle"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} result, score and report files reproduced bit-exactly"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("metric oracle equivalence", metric_oracles),
        ("chance-floor reproduction", chance_floors),
        ("oracle ceiling", oracle_ceiling),
        ("end-to-end determinism", end_to_end_determinism),
        ("statistical correctness", statistics),
        ("dataset accounting", dataset_accounting),
        ("transcript re-scoring", transcript_rescoring),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
