use super::manifest::{DigestBuilder, RunManifest};
use super::{PipelineConfig, StageName};
use crate::corpus::{
    deduplicate, filter_year_window, geocode_record, parse_wos_plaintext, read_csv, read_jsonl, write_jsonl, Corpus,
    Gazetteer, ParseWarning, UNRESOLVED_COUNTRY,
};
use crate::diffusion::{classify_stage_timeline, compute_diffusion_series, detect_decay_patterns, PatternFlags, Stage, StageTimeline};
use crate::forecast::{
    cross_validate_with, fit_linear, fit_mixed, forecast_cumulative, reports_to_csv, CvReport, ModelKind, MixedOptions,
    ObsRow, RegressionFit,
};
use crate::qstat::{q_permutation_test_with, QResult, StratifiedSample};
use crate::topics::{
    apply_label_map, bundled_stopwords, fit_lda, parse_stopwords, preprocess, read_model, select_topic_count_with,
    top_words, write_model, LabelMap, Taxonomy, TopicError, Vocabulary,
};
use crate::tree::{
    build_discipline_direction_tree, build_factor_tree, build_knowledge_evolution_tree, parse_economy_profiles, to_dot,
    to_json, EvolutionTree, LabeledCitation, TieBreak,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

pub(crate) type Artifacts = Vec<(String, Vec<u8>)>;

pub(crate) const CORPUS: &str = "corpus.jsonl";
pub(crate) const GEOCODES: &str = "geocodes.csv";
pub(crate) const PARSE_SUMMARY: &str = "parse_summary.json";
pub(crate) const MODEL: &str = "topic_model.txt";
pub(crate) const VOCABULARY: &str = "vocabulary.txt";
pub(crate) const TOPIC_SELECTION: &str = "topic_selection.json";
pub(crate) const TOP_WORDS: &str = "top_words.csv";
pub(crate) const DOC_TOPICS: &str = "doc_topics.csv";
pub(crate) const LABELED: &str = "labeled.csv";
pub(crate) const SERIES: &str = "series.csv";
pub(crate) const TIMELINE_CSV: &str = "timeline.csv";
pub(crate) const STAGES_JSON: &str = "stages.json";
pub(crate) const TREES_SUMMARY: &str = "trees_summary.json";
pub(crate) const CV_CSV: &str = "cv.csv";
pub(crate) const CV_JSON: &str = "cv.json";
pub(crate) const FITS_CSV: &str = "lr2_fits.csv";
pub(crate) const MIXED_JSON: &str = "mlm_fit.json";
pub(crate) const FORECAST_CSV: &str = "forecast.csv";
pub(crate) const FORECAST_JSON: &str = "forecast.json";
pub(crate) const FORECAST_SUMMARY: &str = "forecast_summary.json";
pub(crate) const QSTAT_JSON: &str = "qstat.json";
pub(crate) const QSTAT_CSV: &str = "qstat.csv";
pub(crate) const REPORT_TXT: &str = "report.txt";
pub(crate) const REPORT_JSON: &str = "report.json";

type StageResult<T> = Result<T, String>;

fn read_text(path: &Path) -> StageResult<String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_bytes(path: &Path) -> StageResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn artifact(cfg: &PipelineConfig, name: &str) -> StageResult<String> {
    read_text(&cfg.output_dir.join(name)).map_err(|e| format!("missing artifact: {e}"))
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s.into_bytes()
}

fn from_json<T: for<'de> Deserialize<'de>>(cfg: &PipelineConfig, name: &str) -> StageResult<T> {
    serde_json::from_str(&artifact(cfg, name)?).map_err(|e| format!("{name}: {e}"))
}

fn csv_bytes<R: Serialize>(rows: &[R]) -> StageResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| e.to_string())?;
    }
    w.into_inner().map_err(|e| e.to_string())
}

fn read_csv_rows<R: for<'de> Deserialize<'de>>(cfg: &PipelineConfig, name: &str) -> StageResult<Vec<R>> {
    let text = artifact(cfg, name)?;
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<R>, _>>()
        .map_err(|e| format!("{name}: {e}"))
}

// --- artifact schemas shared with the report -------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ParseSummary {
    pub source_label: String,
    pub raw_records: usize,
    pub duplicates_removed: usize,
    pub after_dedup: usize,
    pub excluded_by_year: usize,
    pub kept: usize,
    pub year_window: (i32, i32),
    pub unresolved_addresses: usize,
    pub warnings: Vec<ParseWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GeocodeRow {
    record_id: String,
    country: String,
    latitude: Option<f64>,
    longitude: Option<f64>,
    resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct PassResult {
    pub candidates: Vec<usize>,
    /// `(k, held-out perplexity)`; empty when the pass had one candidate.
    pub perplexities: Vec<(usize, f64)>,
    pub chosen: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct TopicSelection {
    pub passes: Vec<PassResult>,
    pub k: usize,
    pub documents: usize,
    pub vocabulary: usize,
    /// Records with no tokens left after preprocessing.
    pub empty_documents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DocTopicRow {
    record_id: String,
    topic: usize,
    weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TopWordRow {
    topic: usize,
    rank: usize,
    word: String,
    probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct LabeledRow {
    pub record_id: String,
    pub direction: String,
    pub discipline: String,
    pub year: i32,
    pub country: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Period {
    pub stage: Stage,
    pub first_year: i32,
    pub last_year: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct StagesArtifact {
    pub timeline: StageTimeline,
    pub periods: Vec<Period>,
    /// Citations per discipline in each period, in period order.
    pub discipline_period_counts: BTreeMap<String, Vec<u64>>,
    pub patterns: Option<PatternFlags>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct TreeSummary {
    pub name: String,
    pub branches: usize,
    pub twigs: usize,
    pub leaves: usize,
    pub leaf_total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ForecastSummary {
    pub modeled_directions: Vec<String>,
    /// Directions observed in fewer than `min_years` years.
    pub excluded_directions: Vec<String>,
    pub last_observed_year: i32,
    pub horizon_year: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct QstatEntry {
    pub factor: String,
    pub economies: usize,
    pub strata: BTreeMap<String, usize>,
    pub log1p: bool,
    pub result: QResult,
}

// --- digests ---------------------------------------------------------------

fn artifact_part(b: DigestBuilder, cfg: &PipelineConfig, name: &str) -> StageResult<DigestBuilder> {
    let bytes = read_bytes(&cfg.output_dir.join(name)).map_err(|e| format!("missing artifact: {e}"))?;
    Ok(b.part(name, &bytes))
}

fn file_part(b: DigestBuilder, key: &str, path: &Path) -> StageResult<DigestBuilder> {
    Ok(b.part(key, &read_bytes(path)?))
}

pub(crate) fn input_digest(stage: StageName, cfg: &PipelineConfig, manifest: &RunManifest) -> StageResult<String> {
    let i = &cfg.inputs;
    let b = DigestBuilder::new(stage);
    let b = match stage {
        StageName::Parse => {
            let b = file_part(b.json("parse", &cfg.parse), "corpus", &i.corpus)?;
            match &i.gazetteer {
                Some(p) => file_part(b, "gazetteer", p)?,
                None => b.part("gazetteer", b"bundled"),
            }
        }
        StageName::Topics => {
            let b = b.json("topics", &cfg.topics).json("seed", &cfg.seed);
            let b = match &i.stopwords {
                Some(p) => file_part(b, "stopwords", p)?,
                None => b.part("stopwords", b"bundled"),
            };
            artifact_part(b, cfg, CORPUS)?
        }
        StageName::Classify => {
            let b = file_part(b, "label_map", &i.label_map)?;
            let b = file_part(b, "taxonomy", &i.taxonomy)?;
            let b = artifact_part(b, cfg, CORPUS)?;
            let b = artifact_part(b, cfg, GEOCODES)?;
            let b = artifact_part(b, cfg, TOPIC_SELECTION)?;
            artifact_part(b, cfg, DOC_TOPICS)?
        }
        StageName::Stages => {
            let b = artifact_part(b.json("stages", &cfg.stages), cfg, PARSE_SUMMARY)?;
            artifact_part(b, cfg, LABELED)?
        }
        StageName::Trees => {
            let b = file_part(b, "taxonomy", &i.taxonomy)?;
            let b = file_part(b, "economy_profiles", &i.economy_profiles)?;
            let b = artifact_part(b, cfg, LABELED)?;
            artifact_part(b, cfg, STAGES_JSON)?
        }
        StageName::Forecast => {
            let b = b.json("forecast", &cfg.forecast).json("seed", &cfg.seed);
            let b = artifact_part(b, cfg, PARSE_SUMMARY)?;
            artifact_part(b, cfg, LABELED)?
        }
        StageName::Qstat => {
            let b = b.json("qstat", &cfg.qstat).json("seed", &cfg.seed);
            let b = file_part(b, "economy_profiles", &i.economy_profiles)?;
            artifact_part(b, cfg, LABELED)?
        }
        StageName::Report => {
            let mut b = b;
            for rec in manifest.stages.iter().filter(|s| s.name != StageName::Report) {
                b = b.json(rec.name.as_str(), &(rec.status == super::StageStatus::Failed, &rec.outputs));
            }
            b
        }
    };
    Ok(b.finish())
}

pub(crate) fn run_stage(stage: StageName, cfg: &PipelineConfig, manifest: &RunManifest) -> StageResult<Artifacts> {
    match stage {
        StageName::Parse => parse(cfg),
        StageName::Topics => topics(cfg),
        StageName::Classify => classify(cfg),
        StageName::Stages => stages(cfg),
        StageName::Trees => trees(cfg),
        StageName::Forecast => forecast(cfg),
        StageName::Qstat => qstat(cfg),
        StageName::Report => {
            let report = super::report::build_report(manifest, &cfg.output_dir).map_err(|e| e.to_string())?;
            Ok(vec![
                (REPORT_TXT.into(), report.render_text().into_bytes()),
                (REPORT_JSON.into(), json(&report)),
            ])
        }
    }
}

// --- stages ----------------------------------------------------------------

fn load_corpus(path: &Path) -> StageResult<(Corpus, Vec<ParseWarning>)> {
    let text = read_text(path)?;
    let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "jsonl" => read_jsonl(&text, label).map(|c| (c, vec![])),
        "csv" => read_csv(&text, label).map(|c| (c, vec![])),
        _ => parse_wos_plaintext(&text).map(|p| (p.corpus, p.warnings)),
    }
    .map(|(mut c, w)| {
        if c.source_label.is_empty() {
            c.source_label = label.to_string();
        }
        (c, w)
    })
    .map_err(|e| format!("{}: {e}", path.display()))
}

fn parse(cfg: &PipelineConfig) -> StageResult<Artifacts> {
    let (raw, warnings) = load_corpus(&cfg.inputs.corpus)?;
    let (deduped, dedup) = deduplicate(&raw);
    let span = deduped.year_span().ok_or("corpus has no records")?;
    let window = (cfg.parse.year_min.unwrap_or(span.0), cfg.parse.year_max.unwrap_or(span.1));
    let split = filter_year_window(&deduped, window.0, window.1).map_err(|e| e.to_string())?;
    if split.kept.is_empty() {
        return Err(format!("no records in {}..={}", window.0, window.1));
    }
    let gazetteer = match &cfg.inputs.gazetteer {
        Some(p) => Gazetteer::parse(&read_text(p)?).map_err(|e| format!("{}: {e}", p.display()))?,
        None => Gazetteer::bundled(),
    };
    let geocodes: Vec<GeocodeRow> = split
        .kept
        .records
        .iter()
        .map(|r| {
            let g = geocode_record(r, &gazetteer);
            GeocodeRow {
                record_id: r.record_id.clone(),
                country: g.country,
                latitude: g.latitude,
                longitude: g.longitude,
                resolved: g.resolved,
            }
        })
        .collect();
    let summary = ParseSummary {
        source_label: raw.source_label.clone(),
        raw_records: raw.len(),
        duplicates_removed: dedup.removed,
        after_dedup: deduped.len(),
        excluded_by_year: split.excluded.len(),
        kept: split.kept.len(),
        year_window: window,
        unresolved_addresses: geocodes.iter().filter(|g| !g.resolved).count(),
        warnings,
    };
    Ok(vec![
        (CORPUS.into(), write_jsonl(&split.kept).into_bytes()),
        (GEOCODES.into(), csv_bytes(&geocodes)?),
        (PARSE_SUMMARY.into(), json(&summary)),
    ])
}

fn topics(cfg: &PipelineConfig) -> StageResult<Artifacts> {
    let corpus = read_jsonl(&artifact(cfg, CORPUS)?, "corpus").map_err(|e| e.to_string())?;
    let stopwords = match &cfg.inputs.stopwords {
        Some(p) => parse_stopwords(&read_text(p)?),
        None => bundled_stopwords(),
    };
    let mut vocab = Vocabulary::new();
    let mut docs = Vec::new();
    let mut empty_documents = Vec::new();
    for rec in &corpus.records {
        match preprocess(rec, &stopwords, &mut vocab) {
            Ok(d) => docs.push(d),
            Err(TopicError::EmptyDocument { doc_id }) => empty_documents.push(doc_id),
            Err(e) => return Err(e.to_string()),
        }
    }
    if !empty_documents.is_empty() {
        log::warn!("{} records have no tokens and are left unclassified", empty_documents.len());
    }
    let t = &cfg.topics;
    let mut passes = Vec::new();
    for candidates in &t.passes {
        let pass = if let [k] = candidates.as_slice() {
            PassResult {
                candidates: candidates.clone(),
                perplexities: vec![],
                chosen: *k,
            }
        } else {
            let sel = select_topic_count_with(&docs, vocab.len(), candidates, t.tolerance, &t.lda, cfg.seed, cfg.execution)
                .map_err(|e| e.to_string())?;
            PassResult {
                candidates: candidates.clone(),
                perplexities: sel.perplexities,
                chosen: sel.chosen,
            }
        };
        log::info!("topic pass {:?}: K = {}", pass.candidates, pass.chosen);
        passes.push(pass);
    }
    let k = passes.last().expect("validated non-empty").chosen;
    let model = fit_lda(&docs, vocab.len(), &t.lda.params(k, cfg.seed)).map_err(|e| e.to_string())?;

    let doc_topics: Vec<DocTopicRow> = model
        .doc_ids
        .iter()
        .zip(&model.doc_topic)
        .map(|(id, theta)| {
            // ties go to the lower topic index
            let (topic, &weight) = theta
                .iter()
                .enumerate()
                .fold((0, &theta[0]), |best, (i, w)| if *w > *best.1 { (i, w) } else { best });
            DocTopicRow {
                record_id: id.clone(),
                topic,
                weight,
            }
        })
        .collect();
    let top: Vec<TopWordRow> = top_words(&model, 10)
        .into_iter()
        .enumerate()
        .flat_map(|(topic, words)| {
            let vocab = &vocab;
            words.into_iter().enumerate().map(move |(rank, (w, p))| TopWordRow {
                topic,
                rank: rank + 1,
                word: vocab.word(w).unwrap_or("?").to_string(),
                probability: p,
            })
        })
        .collect();
    let selection = TopicSelection {
        passes,
        k,
        documents: docs.len(),
        vocabulary: vocab.len(),
        empty_documents,
    };
    let mut vocab_text = vocab.words().join("\n");
    vocab_text.push('\n');
    Ok(vec![
        (MODEL.into(), write_model(&model).into_bytes()),
        (VOCABULARY.into(), vocab_text.into_bytes()),
        (TOPIC_SELECTION.into(), json(&selection)),
        (TOP_WORDS.into(), csv_bytes(&top)?),
        (DOC_TOPICS.into(), csv_bytes(&doc_topics)?),
    ])
}

fn load_taxonomy(cfg: &PipelineConfig) -> StageResult<Taxonomy> {
    Taxonomy::parse(&read_text(&cfg.inputs.taxonomy)?).map_err(|e| format!("inputs.taxonomy: {e}"))
}

fn classify(cfg: &PipelineConfig) -> StageResult<Artifacts> {
    let taxonomy = load_taxonomy(cfg)?;
    let map = LabelMap::parse(&read_text(&cfg.inputs.label_map)?).map_err(|e| format!("inputs.label_map: {e}"))?;
    let selection: TopicSelection = from_json(cfg, TOPIC_SELECTION)?;
    map.validate(selection.k, &taxonomy).map_err(|e| format!("label map for K = {}: {e}", selection.k))?;
    let doc_topics: Vec<DocTopicRow> = read_csv_rows(cfg, DOC_TOPICS)?;
    let pairs: Vec<(String, usize)> = doc_topics.iter().map(|r| (r.record_id.clone(), r.topic)).collect();
    let labeled = apply_label_map(&pairs, &map, &taxonomy).map_err(|e| e.to_string())?;

    let corpus = read_jsonl(&artifact(cfg, CORPUS)?, "corpus").map_err(|e| e.to_string())?;
    let years: BTreeMap<&str, i32> = corpus.records.iter().map(|r| (r.record_id.as_str(), r.year)).collect();
    let geocodes: Vec<GeocodeRow> = read_csv_rows(cfg, GEOCODES)?;
    let countries: BTreeMap<&str, &str> = geocodes.iter().map(|g| (g.record_id.as_str(), g.country.as_str())).collect();
    let rows = labeled
        .into_iter()
        .map(|d| {
            let year = *years.get(d.doc_id.as_str()).ok_or_else(|| format!("{} not in corpus", d.doc_id))?;
            let country = countries.get(d.doc_id.as_str()).copied().unwrap_or(UNRESOLVED_COUNTRY).to_string();
            Ok(LabeledRow {
                record_id: d.doc_id,
                direction: d.direction,
                discipline: d.discipline,
                year,
                country,
            })
        })
        .collect::<StageResult<Vec<_>>>()?;
    Ok(vec![(LABELED.into(), csv_bytes(&rows)?)])
}

fn labeled_rows(cfg: &PipelineConfig) -> StageResult<Vec<LabeledRow>> {
    read_csv_rows(cfg, LABELED)
}

fn stages(cfg: &PipelineConfig) -> StageResult<Artifacts> {
    let rows = labeled_rows(cfg)?;
    let summary: ParseSummary = from_json(cfg, PARSE_SUMMARY)?;
    let triples: Vec<(&str, &str, i32)> = rows.iter().map(|r| (r.record_id.as_str(), r.direction.as_str(), r.year)).collect();
    let series = compute_diffusion_series(&triples, summary.year_window).map_err(|e| e.to_string())?;
    let timeline = classify_stage_timeline(&series, cfg.stages.threshold).map_err(|e| e.to_string())?;
    if !timeline.regressions.is_empty() {
        log::warn!("stage sequence regresses in {:?}", timeline.regressions);
    }

    let periods: Vec<Period> = Stage::ALL
        .iter()
        .filter_map(|&stage| {
            let years = timeline.years_of(stage);
            Some(Period {
                stage,
                first_year: *years.first()?,
                last_year: *years.last()?,
            })
        })
        .collect();
    let mut discipline_period_counts: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for r in &rows {
        let counts = discipline_period_counts
            .entry(r.discipline.clone())
            .or_insert_with(|| vec![0; periods.len()]);
        if let Some(p) = timeline.stage_of(r.year).and_then(|s| periods.iter().position(|p| p.stage == s)) {
            counts[p] += 1;
        }
    }
    let patterns = if periods.len() >= 2 {
        let input: Vec<(&String, Vec<u64>)> = discipline_period_counts.iter().map(|(k, v)| (k, v.clone())).collect();
        Some(detect_decay_patterns(&input).map_err(|e| e.to_string())?)
    } else {
        None
    };

    #[derive(Serialize)]
    struct SeriesRow<'a> {
        direction: &'a str,
        year: i32,
        count: u64,
    }
    #[derive(Serialize)]
    struct TimelineRow {
        year: i32,
        stage: Stage,
    }
    let series_rows: Vec<SeriesRow> = series
        .iter()
        .flat_map(|s| s.counts.iter().map(|(&year, &count)| SeriesRow { direction: &s.direction, year, count }))
        .collect();
    let timeline_rows: Vec<TimelineRow> = timeline.stages.iter().map(|(&year, &stage)| TimelineRow { year, stage }).collect();
    let artifact = StagesArtifact {
        timeline,
        periods,
        discipline_period_counts,
        patterns,
    };
    Ok(vec![
        (SERIES.into(), csv_bytes(&series_rows)?),
        (TIMELINE_CSV.into(), csv_bytes(&timeline_rows)?),
        (STAGES_JSON.into(), json(&artifact)),
    ])
}

fn citations(rows: &[LabeledRow]) -> Vec<LabeledCitation> {
    rows.iter()
        .map(|r| LabeledCitation {
            doc_id: r.record_id.clone(),
            direction: r.direction.clone(),
            discipline: r.discipline.clone(),
            year: r.year,
        })
        .collect()
}

/// Citation counts per resolved country.
fn country_counts(rows: &[LabeledRow]) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for r in rows.iter().filter(|r| r.country != UNRESOLVED_COUNTRY) {
        *counts.entry(r.country.clone()).or_insert(0) += 1;
    }
    counts
}

fn trees(cfg: &PipelineConfig) -> StageResult<Artifacts> {
    let rows = labeled_rows(cfg)?;
    let taxonomy = load_taxonomy(cfg)?;
    let stages: StagesArtifact = from_json(cfg, STAGES_JSON)?;
    let profiles = parse_economy_profiles(&read_text(&cfg.inputs.economy_profiles)?)
        .map_err(|e| format!("inputs.economy_profiles: {e}"))?;
    let cites = citations(&rows);
    let tie = TieBreak::Rank(taxonomy.disciplines().iter().chain(taxonomy.directions()).cloned().collect());

    let mut built: Vec<(String, EvolutionTree)> = Vec::new();
    for p in &stages.periods {
        let tree = build_discipline_direction_tree(&cites, (p.first_year, p.last_year), &tie).map_err(|e| e.to_string())?;
        built.push((format!("tree_{}", p.stage.to_string().to_lowercase()), tree));
    }
    let knowledge = build_knowledge_evolution_tree(&cites, &stages.timeline, &tie).map_err(|e| e.to_string())?;
    built.push(("knowledge_tree".into(), knowledge));
    let factor = build_factor_tree(&country_counts(&rows), &profiles).map_err(|e| e.to_string())?;
    built.push(("factor_tree".into(), factor));

    let mut out = Artifacts::new();
    let mut summary = Vec::new();
    for (name, tree) in &built {
        summary.push(TreeSummary {
            name: name.clone(),
            branches: tree.branches.len(),
            twigs: tree.twig_count(),
            leaves: tree.leaf_count(),
            leaf_total: tree.leaf_total(),
        });
        out.push((format!("{name}.dot"), to_dot(tree).into_bytes()));
        out.push((format!("{name}.json"), to_json(tree).into_bytes()));
    }
    out.push((TREES_SUMMARY.into(), json(&summary)));
    Ok(out)
}

fn forecast(cfg: &PipelineConfig) -> StageResult<Artifacts> {
    let rows = labeled_rows(cfg)?;
    let summary: ParseSummary = from_json(cfg, PARSE_SUMMARY)?;
    let (_, last_year) = summary.year_window;
    let f = &cfg.forecast;
    let triples: Vec<(&str, &str, i32)> = rows.iter().map(|r| (r.record_id.as_str(), r.direction.as_str(), r.year)).collect();
    let series = compute_diffusion_series(&triples, summary.year_window).map_err(|e| e.to_string())?;
    let discipline: BTreeMap<&str, &str> = rows.iter().map(|r| (r.direction.as_str(), r.discipline.as_str())).collect();

    // a direction is observed from its first citation onwards
    let mut obs = Vec::new();
    let mut modeled = Vec::new();
    let mut excluded = Vec::new();
    let mut last_observed = BTreeMap::new();
    for s in &series {
        let first = s.first_year.expect("series built from citations");
        let years: Vec<(i32, u64)> = s.counts.range(first..).map(|(&y, &c)| (y, c)).collect();
        if years.len() < f.min_years {
            excluded.push(s.direction.clone());
            continue;
        }
        modeled.push(s.direction.clone());
        last_observed.insert(s.direction.clone(), (last_year, s.total() as f64));
        for (year, count) in years {
            obs.push(ObsRow {
                direction: s.direction.clone(),
                discipline: discipline[s.direction.as_str()].to_string(),
                year,
                count: count as f64,
            });
        }
    }
    if modeled.is_empty() {
        return Err(format!("no direction spans {} or more years", f.min_years));
    }

    let reports = ModelKind::ALL
        .iter()
        .map(|&m| {
            cross_validate_with(&obs, m, f.folds, f.repeats, cfg.seed, cfg.execution).map_err(|e| format!("{m} cross-validation: {e}"))
        })
        .collect::<StageResult<Vec<CvReport>>>()?;

    let fits = modeled
        .iter()
        .map(|d| {
            let pts: Vec<(i32, f64)> = obs.iter().filter(|r| &r.direction == d).map(|r| (r.year, r.count)).collect();
            fit_linear(&pts, Some(d)).map_err(|e| format!("LR2 fit for {d}: {e}"))
        })
        .collect::<StageResult<Vec<RegressionFit>>>()?;
    let mixed_rows: Vec<(i32, f64, String)> = obs.iter().map(|r| (r.year, r.count, r.discipline.clone())).collect();
    let mixed = fit_mixed(&mixed_rows, MixedOptions::default()).map_err(|e| format!("MLM fit: {e}"))?;
    if !mixed.converged {
        log::warn!("MLM fit stopped at the iteration cap of {}", mixed.iterations);
    }
    let table = forecast_cumulative(&fits, &last_observed, f.horizon_year).map_err(|e| e.to_string())?;

    #[derive(Serialize)]
    struct FitRow<'a> {
        direction: &'a str,
        slope: f64,
        intercept: f64,
        year_origin: i32,
        r2: f64,
        r2_flagged: bool,
        n: usize,
    }
    let fit_rows: Vec<FitRow> = fits
        .iter()
        .map(|fit| FitRow {
            direction: fit.group.as_deref().unwrap_or(""),
            slope: fit.slope,
            intercept: fit.intercept,
            year_origin: fit.year_origin,
            r2: fit.r2,
            r2_flagged: fit.r2_flagged,
            n: fit.n,
        })
        .collect();
    let summary = ForecastSummary {
        modeled_directions: modeled,
        excluded_directions: excluded,
        last_observed_year: last_year,
        horizon_year: f.horizon_year,
    };
    Ok(vec![
        (CV_CSV.into(), reports_to_csv(&reports).into_bytes()),
        (CV_JSON.into(), json(&reports)),
        (FITS_CSV.into(), csv_bytes(&fit_rows)?),
        (MIXED_JSON.into(), json(&mixed)),
        (FORECAST_CSV.into(), table.to_csv().into_bytes()),
        (FORECAST_JSON.into(), json(&table)),
        (FORECAST_SUMMARY.into(), json(&summary)),
    ])
}

fn qstat(cfg: &PipelineConfig) -> StageResult<Artifacts> {
    let rows = labeled_rows(cfg)?;
    let profiles = parse_economy_profiles(&read_text(&cfg.inputs.economy_profiles)?)
        .map_err(|e| format!("inputs.economy_profiles: {e}"))?;
    let by_country: BTreeMap<&str, _> = profiles.iter().map(|p| (p.country.as_str(), p)).collect();
    let counts = country_counts(&rows);
    let missing: BTreeSet<&str> = counts.keys().map(String::as_str).filter(|c| !by_country.contains_key(c)).collect();
    if !missing.is_empty() {
        return Err(format!("no economy profile for {missing:?}"));
    }
    let values: Vec<f64> = counts.values().map(|&c| c as f64).collect();
    let factors: [(&str, Vec<String>); 2] = [
        ("income_type", counts.keys().map(|c| by_country[c.as_str()].income_type.to_string()).collect()),
        ("dev_stage", counts.keys().map(|c| by_country[c.as_str()].dev_stage().to_string()).collect()),
    ];
    let mut entries = Vec::new();
    for (factor, strata) in factors {
        let mut sample = StratifiedSample::new(values.clone(), &strata).map_err(|e| format!("{factor}: {e}"))?;
        if cfg.qstat.log1p {
            sample = sample.log1p().map_err(|e| e.to_string())?;
        }
        let result = q_permutation_test_with(&sample, cfg.qstat.permutations, cfg.seed, cfg.execution)
            .map_err(|e| format!("{factor}: {e}"))?;
        entries.push(QstatEntry {
            factor: factor.to_string(),
            economies: sample.len(),
            strata: sample.stratum_sizes().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            log1p: cfg.qstat.log1p,
            result,
        });
    }

    #[derive(Serialize)]
    struct Row<'a> {
        factor: &'a str,
        q: f64,
        ssw: f64,
        sst: f64,
        p_value: Option<f64>,
        permutations: usize,
        seed: Option<u64>,
    }
    let csv_rows: Vec<Row> = entries
        .iter()
        .map(|e| Row {
            factor: &e.factor,
            q: e.result.q,
            ssw: e.result.ssw,
            sst: e.result.sst,
            p_value: e.result.p_value,
            permutations: e.result.permutations,
            seed: e.result.seed,
        })
        .collect();
    Ok(vec![(QSTAT_JSON.into(), json(&entries)), (QSTAT_CSV.into(), csv_bytes(&csv_rows)?)])
}

/// Reads a model artifact back, for callers inspecting a finished run.
pub fn load_topic_model(output_dir: &Path) -> Result<crate::topics::TopicModel, String> {
    let text = read_text(&output_dir.join(MODEL))?;
    read_model(&text).map_err(|e| e.to_string())
}
