use crate::{ensure, Check};
use difftree::pipeline::{run_pipeline, sha256_hex, validate_report_json, PipelineConfig, StageName, StageStatus};
use std::path::Path;

pub const DEMO_FILES: [&str; 5] = ["config.toml", "corpus.txt", "taxonomy.toml", "label_map.toml", "economy_profiles.csv"];

/// Copies the bundled demo inputs into `dir`.
pub fn stage_demo(dir: &Path) -> std::io::Result<()> {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo");
    for f in DEMO_FILES {
        std::fs::copy(src.join(f), dir.join(f))?;
    }
    Ok(())
}

pub fn check() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    stage_demo(dir.path()).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig::from_file(&dir.path().join("config.toml")).map_err(|e| format!("{e:?}"))?;

    let first = run_pipeline(&cfg, &StageName::ALL).map_err(|e| e.to_string())?;
    ensure!(first.stages.len() == 8, "{} stages in the manifest", first.stages.len());
    let mut artifacts = 0;
    for rec in &first.stages {
        ensure!(rec.status == StageStatus::Ran, "{} is {:?}", rec.name, rec.status);
        ensure!(!rec.outputs.is_empty(), "{} produced nothing", rec.name);
        for (name, digest) in &rec.outputs {
            let bytes = std::fs::read(cfg.output_dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
            ensure!(&sha256_hex(&bytes) == digest, "{name}: digest mismatch");
            artifacts += 1;
        }
    }
    let report_json = std::fs::read_to_string(cfg.output_dir.join("report.json")).map_err(|e| e.to_string())?;
    let report = validate_report_json(&report_json)?;
    let cv_rows = report.forecast.data.as_ref().map_or(0, |f| f.cv.len());
    ensure!(cv_rows == 3, "report has {cv_rows} CV rows");

    let second = run_pipeline(&cfg, &StageName::ALL).map_err(|e| e.to_string())?;
    for (a, b) in first.stages.iter().zip(&second.stages) {
        ensure!(b.status == StageStatus::UpToDate, "rerun: {} is {:?}", b.name, b.status);
        ensure!(a.input_digest == b.input_digest && a.outputs == b.outputs, "rerun: {} digests changed", a.name);
    }
    Ok(format!("8 stages, {artifacts} artifacts verified, rerun skipped every stage"))
}
