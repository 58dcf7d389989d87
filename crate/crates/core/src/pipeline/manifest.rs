use super::RunConfig;
use crate::hashing::sha256_hex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Outputs of one completed stage, by run-relative path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Relative path (always `/`-separated) to SHA-256 of the file.
    pub outputs: BTreeMap<String, String>,
}

/// Provenance of a run directory. Holds no timestamps, so equal inputs
/// give a byte-identical manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config: RunConfig,
    /// Fingerprint of every prompt template in use.
    pub prompts: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn new(config: RunConfig, prompts: BTreeMap<String, String>) -> Self {
        RunManifest {
            run_id: config.run_id.clone(),
            config,
            prompts,
            stages: BTreeMap::new(),
        }
    }

    pub fn load(dir: &Path) -> Result<Option<Self>, String> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Fingerprint the listed outputs and mark the stage complete.
    pub fn record(&mut self, dir: &Path, stage: &str, outputs: &[String]) -> Result<(), String> {
        let mut rec = StageRecord::default();
        for rel in outputs {
            let bytes = std::fs::read(dir.join(rel)).map_err(|e| format!("{rel}: {e}"))?;
            rec.outputs.insert(rel.clone(), sha256_hex(&bytes));
        }
        self.stages.insert(stage.to_string(), rec);
        Ok(())
    }

    pub fn is_complete(&self, stage: &str) -> bool {
        self.stages.contains_key(stage)
    }

    /// The stage that produced a run-relative file.
    pub fn stage_of(&self, rel: &str) -> Option<&str> {
        self.stages
            .iter()
            .find(|(_, r)| r.outputs.contains_key(rel))
            .map(|(s, _)| s.as_str())
    }

    /// Every referenced file exists and matches its fingerprint; returns
    /// one message per violation.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        let mut problems = Vec::new();
        for (stage, rec) in &self.stages {
            for (rel, want) in &rec.outputs {
                match std::fs::read(dir.join(rel)) {
                    Ok(bytes) if sha256_hex(&bytes) == *want => {}
                    Ok(_) => problems.push(format!("{stage}: {rel} does not match its fingerprint")),
                    Err(e) => problems.push(format!("{stage}: {rel}: {e}")),
                }
            }
        }
        problems
    }
}
