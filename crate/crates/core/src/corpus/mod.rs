//! Citation records: parsing, deduplication, year filtering and geocoding.

mod export;
mod geo;
mod wos;

pub use export::{read_csv, read_jsonl, write_csv, write_jsonl};
pub use geo::{geocode_record, GeoPoint, Gazetteer, GazetteerEntry, UNRESOLVED_COUNTRY};
pub use wos::{parse_wos_plaintext, to_wos_plaintext, ParseWarning, ParsedExport};

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CorpusError {
    #[error("input is empty")]
    EmptyInput,
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("invalid year window: {min} > {max}")]
    InvalidWindow { min: i32, max: i32 },
    #[error("gazetteer line {line}: {reason}")]
    Gazetteer { line: usize, reason: String },
    #[error("gazetteer is empty")]
    EmptyGazetteer,
    #[error("record serialization: {0}")]
    Serialization(String),
}

/// One citing document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationRecord {
    pub record_id: String,
    pub title: String,
    pub year: i32,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub addresses: Vec<String>,
    pub wos_categories: Vec<String>,
    pub research_areas: Vec<String>,
    pub doi: Option<String>,
    pub url: Option<String>,
}

/// The citations of one source publication.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub source_label: String,
    pub records: Vec<CitationRecord>,
}

impl Corpus {
    pub fn new(source_label: impl Into<String>, records: Vec<CitationRecord>) -> Self {
        Self {
            source_label: source_label.into(),
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Earliest and latest publication year, if any records exist.
    pub fn year_span(&self) -> Option<(i32, i32)> {
        let min = self.records.iter().map(|r| r.year).min()?;
        let max = self.records.iter().map(|r| r.year).max()?;
        Some((min, max))
    }
}

/// Lowercase, drop punctuation, collapse whitespace.
pub fn normalize_title(title: &str) -> String {
    let cleaned: String = title
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercase a DOI and strip resolver prefixes.
pub fn normalize_doi(doi: &str) -> String {
    let lower = doi.trim().to_lowercase();
    let stripped = ["https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "http://dx.doi.org/", "doi:"]
        .iter()
        .find_map(|p| lower.strip_prefix(p))
        .unwrap_or(&lower);
    stripped.trim().to_string()
}

/// Whether two records describe the same document: equal normalized DOI when
/// both carry one, or equal normalized title and year.
pub fn is_duplicate(a: &CitationRecord, b: &CitationRecord) -> bool {
    if let (Some(da), Some(db)) = (&a.doi, &b.doi) {
        if normalize_doi(da) == normalize_doi(db) {
            return true;
        }
    }
    a.year == b.year && normalize_title(&a.title) == normalize_title(&b.title)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupReport {
    pub kept: usize,
    pub removed: usize,
}

/// Collapses duplicates onto their first occurrence, preserving order.
///
/// A record is dropped when it duplicates an earlier *kept* record, so the
/// output never contains a duplicate pair and a second pass is a no-op.
pub fn deduplicate(corpus: &Corpus) -> (Corpus, DedupReport) {
    let mut seen_doi: HashSet<String> = HashSet::new();
    let mut seen_title: HashSet<(String, i32)> = HashSet::new();
    let mut kept = Vec::with_capacity(corpus.records.len());
    for record in &corpus.records {
        let doi_key = record.doi.as_deref().map(normalize_doi);
        let title_key = (normalize_title(&record.title), record.year);
        let dup_doi = doi_key.as_ref().is_some_and(|d| seen_doi.contains(d));
        if dup_doi || seen_title.contains(&title_key) {
            continue;
        }
        if let Some(d) = doi_key {
            seen_doi.insert(d);
        }
        seen_title.insert(title_key);
        kept.push(record.clone());
    }
    let report = DedupReport {
        kept: kept.len(),
        removed: corpus.records.len() - kept.len(),
    };
    (Corpus::new(corpus.source_label.clone(), kept), report)
}

/// Records inside and outside an inclusive year window.
#[derive(Debug, Clone, PartialEq)]
pub struct YearSplit {
    pub kept: Corpus,
    pub excluded: Vec<CitationRecord>,
}

pub fn filter_year_window(corpus: &Corpus, min_year: i32, max_year: i32) -> Result<YearSplit, CorpusError> {
    if min_year > max_year {
        return Err(CorpusError::InvalidWindow {
            min: min_year,
            max: max_year,
        });
    }
    let (kept, excluded): (Vec<_>, Vec<_>) = corpus
        .records
        .iter()
        .cloned()
        .partition(|r| (min_year..=max_year).contains(&r.year));
    Ok(YearSplit {
        kept: Corpus::new(corpus.source_label.clone(), kept),
        excluded,
    })
}

#[cfg(test)]
pub(crate) fn record(id: &str, title: &str, year: i32, doi: Option<&str>) -> CitationRecord {
    CitationRecord {
        record_id: id.into(),
        title: title.into(),
        year,
        abstract_text: String::new(),
        addresses: vec![],
        wos_categories: vec![],
        research_areas: vec![],
        doi: doi.map(Into::into),
        url: None,
    }
}
