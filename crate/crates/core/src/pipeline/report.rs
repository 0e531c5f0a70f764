use super::manifest::{RunManifest, StageStatus};
use super::stages::{
    ForecastSummary, LabeledRow, ParseSummary, QstatEntry, StagesArtifact, TopicSelection, TreeSummary, CV_JSON,
    FORECAST_JSON, FORECAST_SUMMARY, LABELED, PARSE_SUMMARY, QSTAT_JSON, STAGES_JSON, TOPIC_SELECTION, TREES_SUMMARY,
};
use super::{PipelineError, StageName};
use crate::forecast::{CvReport, ForecastTable};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const STATUS_OK: &str = "ok";
pub const STATUS_NOT_RUN: &str = "not run";
pub const STATUS_FAILED: &str = "failed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section<T> {
    /// `ok`, `not run` or `failed`; `data` is present exactly when `ok`.
    pub status: String,
    pub data: Option<T>,
}

impl<T> Section<T> {
    fn ok(data: T) -> Self {
        Self {
            status: STATUS_OK.into(),
            data: Some(data),
        }
    }

    fn absent(status: &str) -> Self {
        Self {
            status: status.into(),
            data: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub source_label: String,
    pub raw_records: usize,
    pub duplicates_removed: usize,
    pub after_dedup: usize,
    pub excluded_by_year: usize,
    pub kept: usize,
    pub year_window: (i32, i32),
    pub unresolved_addresses: usize,
    pub parse_warnings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicPass {
    pub candidates: Vec<usize>,
    pub chosen: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicsSection {
    pub passes: Vec<TopicPass>,
    pub k: usize,
    pub documents: usize,
    pub vocabulary: usize,
    pub empty_documents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySection {
    pub labeled: usize,
    /// Citations per discipline.
    pub disciplines: BTreeMap<String, usize>,
    /// Citations per direction.
    pub directions: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodRow {
    pub stage: String,
    pub first_year: i32,
    pub last_year: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagesSection {
    pub periods: Vec<PeriodRow>,
    pub regressions: Vec<i32>,
    pub senescence: Vec<(String, usize)>,
    pub moth_decay: Vec<(String, [usize; 3])>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeRow {
    pub name: String,
    pub branches: usize,
    pub twigs: usize,
    pub leaves: usize,
    pub leaf_total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvRow {
    pub model: String,
    pub fitted_models: usize,
    pub train_r2: f64,
    pub train_rmsfe: f64,
    pub train_mafe: f64,
    pub test_r2: f64,
    pub test_rmsfe: f64,
    pub test_mafe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonRow {
    pub direction: String,
    pub year: i32,
    pub predicted_cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastSection {
    pub cv: Vec<CvRow>,
    /// Projected cumulative citations at the horizon, per direction.
    pub horizon: Vec<HorizonRow>,
    pub excluded_directions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QRow {
    pub factor: String,
    pub economies: usize,
    pub strata: BTreeMap<String, usize>,
    pub q: f64,
    pub p_value: Option<f64>,
    pub permutations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub corpus: Section<CorpusSection>,
    pub topics: Section<TopicsSection>,
    pub classify: Section<ClassifySection>,
    pub stages: Section<StagesSection>,
    pub trees: Section<Vec<TreeRow>>,
    pub forecast: Section<ForecastSection>,
    pub qstat: Section<Vec<QRow>>,
}

fn read_json<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<T, PipelineError> {
    let path = dir.join(name);
    let text = std::fs::read_to_string(&path).map_err(|_| PipelineError::MissingArtifact(path.clone()))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::StageFailure {
        stage: StageName::Report,
        message: format!("{name}: {e}"),
    })
}

/// Builds a section for `stage`, or marks it not run / failed.
fn section<T>(
    manifest: &RunManifest,
    dir: &Path,
    stage: StageName,
    build: impl FnOnce() -> Result<T, PipelineError>,
) -> Result<Section<T>, PipelineError> {
    match manifest.stage(stage) {
        None => Ok(Section::absent(STATUS_NOT_RUN)),
        Some(r) if r.status == StageStatus::Failed => Ok(Section::absent(STATUS_FAILED)),
        Some(r) => {
            if let Some(name) = r.outputs.keys().find(|n| !dir.join(n).is_file()) {
                return Err(PipelineError::MissingArtifact(dir.join(name)));
            }
            build().map(Section::ok)
        }
    }
}

pub(crate) fn build_report(manifest: &RunManifest, dir: &Path) -> Result<Report, PipelineError> {
    let corpus = section(manifest, dir, StageName::Parse, || {
        let s: ParseSummary = read_json(dir, PARSE_SUMMARY)?;
        Ok(CorpusSection {
            source_label: s.source_label,
            raw_records: s.raw_records,
            duplicates_removed: s.duplicates_removed,
            after_dedup: s.after_dedup,
            excluded_by_year: s.excluded_by_year,
            kept: s.kept,
            year_window: s.year_window,
            unresolved_addresses: s.unresolved_addresses,
            parse_warnings: s.warnings.len(),
        })
    })?;
    let topics = section(manifest, dir, StageName::Topics, || {
        let s: TopicSelection = read_json(dir, TOPIC_SELECTION)?;
        Ok(TopicsSection {
            passes: s
                .passes
                .iter()
                .map(|p| TopicPass {
                    candidates: p.candidates.clone(),
                    chosen: p.chosen,
                })
                .collect(),
            k: s.k,
            documents: s.documents,
            vocabulary: s.vocabulary,
            empty_documents: s.empty_documents.len(),
        })
    })?;
    let classify = section(manifest, dir, StageName::Classify, || {
        let path = dir.join(LABELED);
        let text = std::fs::read_to_string(&path).map_err(|_| PipelineError::MissingArtifact(path.clone()))?;
        let rows: Vec<LabeledRow> = csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e| PipelineError::StageFailure {
                stage: StageName::Report,
                message: format!("{LABELED}: {e}"),
            })?;
        let mut disciplines = BTreeMap::new();
        let mut directions = BTreeMap::new();
        for r in &rows {
            *disciplines.entry(r.discipline.clone()).or_insert(0) += 1;
            *directions.entry(r.direction.clone()).or_insert(0) += 1;
        }
        Ok(ClassifySection {
            labeled: rows.len(),
            disciplines,
            directions,
        })
    })?;
    let stages = section(manifest, dir, StageName::Stages, || {
        let s: StagesArtifact = read_json(dir, STAGES_JSON)?;
        let patterns = s.patterns.unwrap_or_default();
        Ok(StagesSection {
            periods: s
                .periods
                .iter()
                .map(|p| PeriodRow {
                    stage: p.stage.to_string(),
                    first_year: p.first_year,
                    last_year: p.last_year,
                })
                .collect(),
            regressions: s.timeline.regressions,
            senescence: patterns.senescence_at,
            moth_decay: patterns.moth_decay_at,
        })
    })?;
    let trees = section(manifest, dir, StageName::Trees, || {
        let s: Vec<TreeSummary> = read_json(dir, TREES_SUMMARY)?;
        Ok(s.into_iter()
            .map(|t| TreeRow {
                name: t.name,
                branches: t.branches,
                twigs: t.twigs,
                leaves: t.leaves,
                leaf_total: t.leaf_total,
            })
            .collect())
    })?;
    let forecast = section(manifest, dir, StageName::Forecast, || {
        let cv: Vec<CvReport> = read_json(dir, CV_JSON)?;
        let table: ForecastTable = read_json(dir, FORECAST_JSON)?;
        let summary: ForecastSummary = read_json(dir, FORECAST_SUMMARY)?;
        Ok(ForecastSection {
            cv: cv
                .iter()
                .map(|r| CvRow {
                    model: r.model_name.to_string(),
                    fitted_models: r.fitted_models,
                    train_r2: r.train.r2,
                    train_rmsfe: r.train.rmsfe,
                    train_mafe: r.train.mafe,
                    test_r2: r.test.r2,
                    test_rmsfe: r.test.rmsfe,
                    test_mafe: r.test.mafe,
                })
                .collect(),
            horizon: table
                .rows
                .iter()
                .filter(|r| r.year == summary.horizon_year)
                .map(|r| HorizonRow {
                    direction: r.direction.clone(),
                    year: r.year,
                    predicted_cumulative: r.predicted_cumulative,
                })
                .collect(),
            excluded_directions: summary.excluded_directions,
        })
    })?;
    let qstat = section(manifest, dir, StageName::Qstat, || {
        let entries: Vec<QstatEntry> = read_json(dir, QSTAT_JSON)?;
        Ok(entries
            .into_iter()
            .map(|e| QRow {
                factor: e.factor,
                economies: e.economies,
                strata: e.strata,
                q: e.result.q,
                p_value: e.result.p_value,
                permutations: e.result.permutations,
            })
            .collect())
    })?;
    Ok(Report {
        corpus,
        topics,
        classify,
        stages,
        trees,
        forecast,
        qstat,
    })
}

/// The report for the stages recorded in `manifest`; fails with
/// `MissingArtifact` if a recorded output is gone.
pub fn emit_report(manifest: &RunManifest, output_dir: &Path) -> Result<Report, PipelineError> {
    build_report(manifest, output_dir)
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let mut o = String::new();
        let head = |o: &mut String, title: &str, status: &str| {
            let _ = writeln!(o, "\n== {title} ==");
            if status != STATUS_OK {
                let _ = writeln!(o, "{status}");
            }
        };
        let _ = writeln!(o, "difftree run report");

        head(&mut o, "Corpus", &self.corpus.status);
        if let Some(c) = &self.corpus.data {
            let _ = writeln!(o, "source: {}", c.source_label);
            let _ = writeln!(o, "records parsed: {}", c.raw_records);
            let _ = writeln!(o, "after deduplication: {} ({} removed)", c.after_dedup, c.duplicates_removed);
            let _ = writeln!(
                o,
                "in window {}-{}: {} ({} excluded)",
                c.year_window.0, c.year_window.1, c.kept, c.excluded_by_year
            );
            let _ = writeln!(o, "unresolved addresses: {}", c.unresolved_addresses);
            let _ = writeln!(o, "parse warnings: {}", c.parse_warnings);
        }

        head(&mut o, "Topics", &self.topics.status);
        if let Some(t) = &self.topics.data {
            for (i, p) in t.passes.iter().enumerate() {
                let _ = writeln!(o, "pass {}: candidates {:?}, chosen K = {}", i + 1, p.candidates, p.chosen);
            }
            let _ = writeln!(o, "model: K = {}, {} documents, {} terms", t.k, t.documents, t.vocabulary);
            if t.empty_documents > 0 {
                let _ = writeln!(o, "documents without tokens: {}", t.empty_documents);
            }
        }

        head(&mut o, "Classification", &self.classify.status);
        if let Some(c) = &self.classify.data {
            let _ = writeln!(o, "labeled citations: {}", c.labeled);
            for (d, n) in &c.disciplines {
                let _ = writeln!(o, "  {d:<12} {n}");
            }
        }

        head(&mut o, "Diffusion stages", &self.stages.status);
        if let Some(s) = &self.stages.data {
            for p in &s.periods {
                let _ = writeln!(o, "{:<8} {}-{}", p.stage, p.first_year, p.last_year);
            }
            if !s.regressions.is_empty() {
                let _ = writeln!(o, "stage regressions in {:?}", s.regressions);
            }
            for (d, p) in &s.senescence {
                let _ = writeln!(o, "senescence: {d} at period {p}");
            }
            for (d, p) in &s.moth_decay {
                let _ = writeln!(o, "moth decay: {d} over periods {p:?}");
            }
        }

        head(&mut o, "Evolution trees", &self.trees.status);
        if let Some(trees) = &self.trees.data {
            let _ = writeln!(o, "{:<16} {:>8} {:>6} {:>6} {:>8}", "tree", "branches", "twigs", "leaves", "total");
            for t in trees {
                let _ = writeln!(
                    o,
                    "{:<16} {:>8} {:>6} {:>6} {:>8}",
                    t.name, t.branches, t.twigs, t.leaves, t.leaf_total
                );
            }
        }

        head(&mut o, "Forecast", &self.forecast.status);
        if let Some(f) = &self.forecast.data {
            let _ = writeln!(
                o,
                "{:<5} {:>7} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
                "model", "fits", "train_r2", "rmsfe", "mafe", "test_r2", "rmsfe", "mafe"
            );
            for r in &f.cv {
                let _ = writeln!(
                    o,
                    "{:<5} {:>7} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
                    r.model, r.fitted_models, r.train_r2, r.train_rmsfe, r.train_mafe, r.test_r2, r.test_rmsfe, r.test_mafe
                );
            }
            for h in &f.horizon {
                let _ = writeln!(o, "  {:<24} {} cumulative {:.1}", h.direction, h.year, h.predicted_cumulative);
            }
            if !f.excluded_directions.is_empty() {
                let _ = writeln!(o, "too short to model: {}", f.excluded_directions.join(", "));
            }
        }

        head(&mut o, "q-statistic", &self.qstat.status);
        if let Some(q) = &self.qstat.data {
            for r in q {
                let p = r.p_value.map(|p| format!("{p:.4}")).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    o,
                    "{:<12} q = {:.4}  p = {p}  ({} economies, {} strata, {} permutations)",
                    r.factor,
                    r.q,
                    r.economies,
                    r.strata.len(),
                    r.permutations
                );
            }
        }
        o
    }
}

fn check_section<T>(name: &str, s: &Section<T>, errors: &mut Vec<String>) {
    let valid = match s.status.as_str() {
        STATUS_OK => s.data.is_some(),
        STATUS_NOT_RUN | STATUS_FAILED => s.data.is_none(),
        _ => false,
    };
    if !valid {
        errors.push(format!("{name}: status {:?} does not match data presence", s.status));
    }
}

/// Parses report JSON and checks it against the schema and its value
/// constraints.
pub fn validate_report_json(text: &str) -> Result<Report, String> {
    let report: Report = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mut errors = Vec::new();
    check_section("corpus", &report.corpus, &mut errors);
    check_section("topics", &report.topics, &mut errors);
    check_section("classify", &report.classify, &mut errors);
    check_section("stages", &report.stages, &mut errors);
    check_section("trees", &report.trees, &mut errors);
    check_section("forecast", &report.forecast, &mut errors);
    check_section("qstat", &report.qstat, &mut errors);

    if let Some(c) = &report.corpus.data {
        if c.after_dedup + c.duplicates_removed != c.raw_records || c.kept + c.excluded_by_year != c.after_dedup {
            errors.push("corpus: counts do not add up".into());
        }
    }
    if let Some(t) = &report.topics.data {
        if t.passes.last().map(|p| p.chosen) != Some(t.k) || t.passes.iter().any(|p| !p.candidates.contains(&p.chosen)) {
            errors.push("topics: chosen K inconsistent with passes".into());
        }
    }
    if let Some(f) = &report.forecast.data {
        let mut models: Vec<&str> = f.cv.iter().map(|r| r.model.as_str()).collect();
        models.sort_unstable();
        let n = models.len();
        models.dedup();
        if models.len() != n || models.iter().any(|m| !["LR1", "LR2", "MLM"].contains(m)) {
            errors.push("forecast: cv rows must be distinct LR1/LR2/MLM".into());
        }
        if f.cv.iter().any(|r| r.train_rmsfe < 0.0 || r.train_mafe < 0.0 || r.test_rmsfe < 0.0 || r.test_mafe < 0.0) {
            errors.push("forecast: negative error metric".into());
        }
    }
    if let Some(q) = &report.qstat.data {
        for r in q {
            if !(0.0..=1.0).contains(&r.q) || r.p_value.is_some_and(|p| !(p > 0.0 && p <= 1.0)) {
                errors.push(format!("qstat {}: q or p out of range", r.factor));
            }
        }
    }
    if let Some(trees) = &report.trees.data {
        for t in trees {
            if t.leaves as u64 > t.leaf_total {
                errors.push(format!("trees {}: more leaves than citations", t.name));
            }
        }
    }
    if errors.is_empty() {
        Ok(report)
    } else {
        Err(errors.join("; "))
    }
}
