use super::StageName;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ran,
    /// Inputs and outputs matched the previous run; nothing was executed.
    UpToDate,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: StageName,
    pub status: StageStatus,
    pub input_digest: String,
    /// Artifact file name -> sha256.
    pub outputs: BTreeMap<String, String>,
    pub error: Option<String>,
    pub started_at: String,
    pub finished_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_digest: String,
    /// In pipeline order; stages never run are absent.
    pub stages: Vec<StageRecord>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn stage(&self, name: StageName) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// True when the stage completed in this or an earlier run.
    pub fn has_run(&self, name: StageName) -> bool {
        self.stage(name).is_some_and(|s| s.status != StageStatus::Failed)
    }

    pub(crate) fn upsert(&mut self, record: StageRecord) {
        self.stages.retain(|s| s.name != record.name);
        self.stages.push(record);
        self.stages.sort_by_key(|s| s.name);
    }

    pub fn load(output_dir: &Path) -> Option<Self> {
        let text = std::fs::read_to_string(output_dir.join(MANIFEST_FILE)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Accumulates named components into a single digest.
pub(crate) struct DigestBuilder {
    hasher: Sha256,
}

impl DigestBuilder {
    pub fn new(stage: StageName) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(format!("stage={}\n", stage.as_str()));
        Self { hasher }
    }

    pub fn part(mut self, key: &str, bytes: &[u8]) -> Self {
        self.hasher.update(format!("{key}={}\n", sha256_hex(bytes)));
        self
    }

    pub fn json<T: Serialize>(self, key: &str, value: &T) -> Self {
        let text = serde_json::to_string(value).expect("parameters serialize");
        self.part(key, text.as_bytes())
    }

    pub fn finish(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}
