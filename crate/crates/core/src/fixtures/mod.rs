//! Offline fixtures: a miniature grammar book, recorded transcripts and
//! golden outputs, plus generated datasets for statistical tests.

mod author;
mod golden;
mod synthetic;

pub use author::{
    degrade, judge_value, AuthorBank, AuthoredPair, AuthoredPoint, FixtureAuthor, AUTHOR_MODEL,
    FIXTURE_PROVIDER, JUDGE_MODEL, NOISY_FLIP_RATE, NOISY_MODEL, ORACLE_MODEL, RANDOM_MODEL,
};
pub use golden::{
    load_config, record, stage_for_template, tree_files, unified_diff, verify, FixtureError,
    Mismatch, RecordReport, VerifyReport, CACHE_DIR, CONFIG_FILE, GOLDEN_DIR, RETENTION_DIR,
};
pub use synthetic::{
    retention_dataset, synthetic_dataset, RETENTION_FAILING, RETENTION_PAIRS, RETENTION_POINTS,
};
