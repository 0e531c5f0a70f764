//! Staged runs behind a declarative config.
//!
//! Stages form a fixed DAG (parse → topics → classify → {stages, forecast,
//! qstat}, stages → trees) plus a report over whatever has run. Each stage
//! reads its inputs from the config and earlier artifacts in the output
//! directory and returns new artifacts; the runner alone writes files. A
//! stage whose input digest and output files match the previous manifest is
//! skipped.

mod config;
mod manifest;
mod report;
mod stages;

pub use config::{FieldError, ForecastParams, Inputs, ParseParams, PipelineConfig, QstatParams, StageParams, TopicParams};
pub use manifest::{sha256_hex, RunManifest, StageRecord, StageStatus, MANIFEST_FILE};
pub use report::{
    emit_report, validate_report_json, ClassifySection, CorpusSection, CvRow, ForecastSection, HorizonRow, PeriodRow, QRow,
    Report, Section, StagesSection, TopicPass, TopicsSection, TreeRow, STATUS_FAILED, STATUS_NOT_RUN, STATUS_OK,
};
pub use stages::load_topic_model;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "DIFFTREE_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageName {
    Parse,
    Topics,
    Classify,
    Stages,
    Trees,
    Forecast,
    Qstat,
    Report,
}

impl StageName {
    /// Pipeline order, which is a topological order of the DAG.
    pub const ALL: [StageName; 8] = [
        StageName::Parse,
        StageName::Topics,
        StageName::Classify,
        StageName::Stages,
        StageName::Trees,
        StageName::Forecast,
        StageName::Qstat,
        StageName::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageName::Parse => "parse",
            StageName::Topics => "topics",
            StageName::Classify => "classify",
            StageName::Stages => "stages",
            StageName::Trees => "trees",
            StageName::Forecast => "forecast",
            StageName::Qstat => "qstat",
            StageName::Report => "report",
        }
    }

    /// Direct prerequisites. The report has none: it covers whatever ran.
    pub fn requires(self) -> &'static [StageName] {
        match self {
            StageName::Parse | StageName::Report => &[],
            StageName::Topics => &[StageName::Parse],
            StageName::Classify => &[StageName::Topics],
            StageName::Stages | StageName::Forecast | StageName::Qstat => &[StageName::Classify],
            StageName::Trees => &[StageName::Stages],
        }
    }
}

impl fmt::Display for StageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StageName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        StageName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid config:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    ConfigInvalid(Vec<FieldError>),
    #[error("stage {stage} failed: {message}")]
    StageFailure { stage: StageName, message: String },
    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),
}

/// Requested stages plus everything they depend on, in pipeline order.
pub fn expand_stages(requested: &[StageName]) -> Vec<StageName> {
    let mut needed = std::collections::BTreeSet::new();
    let mut stack: Vec<StageName> = requested.to_vec();
    while let Some(s) = stack.pop() {
        if needed.insert(s) {
            stack.extend_from_slice(s.requires());
        }
    }
    StageName::ALL.into_iter().filter(|s| needed.contains(s)).collect()
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<(), String> {
    std::fs::write(out.join(MANIFEST_FILE), manifest.to_json()).map_err(|e| e.to_string())
}

fn outputs_intact(out: &Path, record: &StageRecord) -> bool {
    record
        .outputs
        .iter()
        .all(|(name, digest)| std::fs::read(out.join(name)).is_ok_and(|b| &sha256_hex(&b) == digest))
}

/// Runs `requested` and their prerequisites, skipping up-to-date stages.
/// On failure the manifest written so far, including the failed stage,
/// stays on disk.
pub fn run_pipeline(config: &PipelineConfig, requested: &[StageName]) -> Result<RunManifest, PipelineError> {
    let out = config.output_dir.as_path();
    let fail = |stage, message: String| PipelineError::StageFailure { stage, message };
    std::fs::create_dir_all(out).map_err(|e| fail(StageName::Parse, format!("{}: {e}", out.display())))?;

    let previous = RunManifest::load(out);
    let config_json = serde_json::to_string(config).expect("config serializes");
    let mut manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_digest: sha256_hex(config_json.as_bytes()),
        stages: previous.as_ref().map(|m| m.stages.clone()).unwrap_or_default(),
        started_at: now(),
        finished_at: String::new(),
    };

    for stage in expand_stages(requested) {
        let started_at = now();
        let input_digest = match stages::input_digest(stage, config, &manifest) {
            Ok(d) => d,
            Err(message) => {
                return Err(record_failure(out, &mut manifest, stage, String::new(), started_at, message));
            }
        };
        if let Some(prev) = previous.as_ref().and_then(|m| m.stage(stage)) {
            if prev.status != StageStatus::Failed && prev.input_digest == input_digest && outputs_intact(out, prev) {
                log::info!("{stage}: up to date");
                manifest.upsert(StageRecord {
                    status: StageStatus::UpToDate,
                    started_at,
                    finished_at: now(),
                    ..prev.clone()
                });
                continue;
            }
        }
        log::info!("{stage}: running");
        let artifacts = match stages::run_stage(stage, config, &manifest) {
            Ok(a) => a,
            Err(message) => {
                return Err(record_failure(out, &mut manifest, stage, input_digest, started_at, message));
            }
        };
        let mut outputs = std::collections::BTreeMap::new();
        for (name, bytes) in &artifacts {
            if let Err(e) = std::fs::write(out.join(name), bytes) {
                let message = format!("writing {name}: {e}");
                return Err(record_failure(out, &mut manifest, stage, input_digest, started_at, message));
            }
            outputs.insert(name.clone(), sha256_hex(bytes));
        }
        manifest.upsert(StageRecord {
            name: stage,
            status: StageStatus::Ran,
            input_digest,
            outputs,
            error: None,
            started_at,
            finished_at: now(),
        });
    }
    manifest.finished_at = now();
    write_manifest(out, &manifest).map_err(|e| fail(StageName::Report, e))?;
    Ok(manifest)
}

fn record_failure(
    out: &Path,
    manifest: &mut RunManifest,
    stage: StageName,
    input_digest: String,
    started_at: String,
    message: String,
) -> PipelineError {
    log::error!("{stage}: {message}");
    manifest.upsert(StageRecord {
        name: stage,
        status: StageStatus::Failed,
        input_digest,
        outputs: Default::default(),
        error: Some(message.clone()),
        started_at,
        finished_at: now(),
    });
    manifest.finished_at = now();
    if let Err(e) = write_manifest(out, manifest) {
        log::error!("could not write partial manifest: {e}");
    }
    PipelineError::StageFailure { stage, message }
}
