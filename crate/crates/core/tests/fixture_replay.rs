use gramprobe::fixtures::{self, tree_files, FixtureError, CACHE_DIR};
use gramprobe::template::PromptSet;
use std::fs;
use std::path::{Path, PathBuf};

fn fixtures_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn copy_fixtures(to: &Path) {
    let from = fixtures_root();
    for rel in tree_files(&from).unwrap() {
        let dst = to.join(&rel);
        fs::create_dir_all(dst.parent().unwrap()).unwrap();
        fs::copy(from.join(&rel), dst).unwrap();
    }
}

#[test]
fn replay_matches_golden() {
    let work = tempfile::tempdir().unwrap();
    let report = fixtures::verify(&fixtures_root(), &PromptSet::builtin(), work.path()).unwrap();
    assert_eq!(report.replay_misses, 0);
    assert_eq!(report.upstream_calls, 0);
    assert!(report.files > 0);
}

#[test]
fn deleted_transcript_is_a_replay_miss() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("fx");
    copy_fixtures(&root);
    let cache = root.join(CACHE_DIR);
    let victim = tree_files(&cache).unwrap().into_iter().next().unwrap();
    fs::remove_file(cache.join(&victim)).unwrap();
    let hash = Path::new(&victim).file_stem().unwrap().to_string_lossy().into_owned();

    let err = fixtures::verify(&root, &PromptSet::builtin(), &tmp.path().join("work")).unwrap_err();
    assert_eq!(err.kind(), "ReplayMiss");
    assert!(err.to_string().contains(&hash), "{err}");
}

#[test]
fn edited_template_names_its_stage() {
    let work = tempfile::tempdir().unwrap();
    let builtin = PromptSet::builtin();
    let edited = format!("{}\nBe concise.", builtin.get("forge").unwrap().source());
    let prompts = builtin.with_template("forge", &edited).unwrap();
    match fixtures::verify(&fixtures_root(), &prompts, work.path()) {
        Err(FixtureError::GoldenMismatch(ms)) => {
            assert_eq!(ms.len(), 1);
            assert_eq!(ms[0].stage, "pairs");
            assert!(ms[0].diff.contains("golden/manifest.json"));
        }
        other => panic!("expected a golden mismatch, got {other:?}"),
    }
}

#[test]
fn golden_counts() {
    use gramprobe::dataset::{validate, Dataset};
    use gramprobe::forge::FilterPolicy;
    let ds = Dataset::load(&fixtures_root().join(fixtures::GOLDEN_DIR)).unwrap();
    let r = validate(&ds, &FilterPolicy::default());
    assert!(r.is_valid(), "{:?}", r.violations);
    assert_eq!((r.points, r.pairs, r.verified_pairs, r.minimal_pairs), (6, 24, 22, 22));
}
