use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn gramprobe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gramprobe")).args(args).output().unwrap()
}

fn error_tail(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(stderr.lines().last().unwrap()).unwrap()
}

#[test]
fn usage_error_exits_two() {
    assert_eq!(gramprobe(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(gramprobe(&["tasks", "run", "--kind", "7"]).status.code(), Some(2));
}

#[test]
fn replay_miss_has_error_tail() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixtures_root().join("fixture.toml");
    let out = gramprobe(&[
        "--config",
        config.to_str().unwrap(),
        "--runs-dir",
        tmp.path().to_str().unwrap(),
        "--cache-dir",
        tmp.path().join("empty").to_str().unwrap(),
        "--replay-only",
        "pipeline",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let tail = error_tail(&out);
    assert_eq!(tail["error"]["kind"], "ReplayMiss");
    assert!(tail["error"]["message"].as_str().unwrap().contains("replay miss"));
}

#[test]
fn missing_input_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gramprobe(&["--runs-dir", tmp.path().to_str().unwrap(), "segment"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_tail(&out)["error"]["kind"], "MissingInput");
}

#[test]
fn validate_prints_counts() {
    let out = gramprobe(&["validate", "--dir", fixtures_root().join("golden").to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("points=6 pairs=24 verified=22 rejected=2 minimal_pairs=22"), "{stdout}");
}

#[test]
fn fixtures_verify_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gramprobe(&[
        "fixtures",
        "verify",
        "--root",
        fixtures_root().to_str().unwrap(),
        "--work-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("replay misses 0"));
}

#[test]
fn scores_text_files() {
    let tmp = tempfile::tempdir().unwrap();
    let hyp = tmp.path().join("hyp.txt");
    let reference = tmp.path().join("ref.txt");
    let external = tmp.path().join("comet.jsonl");
    let out = tmp.path().join("scores.jsonl");
    std::fs::write(&hyp, "Moien Welt\nDe Mann gesäit de Hond.\n").unwrap();
    std::fs::write(&reference, "Moien Welt\nDe Mann gesäit den Hond.\n").unwrap();
    std::fs::write(
        &external,
        "{\"segment_id\":\"seg-000001\",\"score\":0.9}\n{\"segment_id\":\"seg-000002\",\"score\":0.7}\n",
    )
    .unwrap();
    let res = gramprobe(&[
        "score",
        "--metrics",
        "chrfpp,bleu,external",
        "--hyp",
        hyp.to_str().unwrap(),
        "--ref",
        reference.to_str().unwrap(),
        "--external",
        external.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows: Vec<Value> = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0]["segment_id"], "seg-000001");
    assert_eq!(rows[0]["metric"], "chrfpp");
    assert_eq!(rows[0]["value"], 100.0);
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("external\t0.800000")), "{stdout}");
}

#[test]
fn misaligned_files_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let hyp = tmp.path().join("hyp.txt");
    let reference = tmp.path().join("ref.txt");
    std::fs::write(&hyp, "a\n").unwrap();
    std::fs::write(&reference, "a\nb\n").unwrap();
    let res = gramprobe(&["score", "--hyp", hyp.to_str().unwrap(), "--ref", reference.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(error_tail(&res)["error"]["message"].as_str().unwrap().contains("line counts differ"));
}
