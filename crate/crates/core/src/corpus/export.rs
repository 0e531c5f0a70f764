//! JSON-lines and CSV forms of a corpus.

use super::{CitationRecord, Corpus, CorpusError};
use serde::{Deserialize, Serialize};

pub fn write_jsonl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for r in &corpus.records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_jsonl(text: &str, source_label: &str) -> Result<Corpus, CorpusError> {
    let records = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| CorpusError::Serialization(e.to_string())))
        .collect::<Result<Vec<CitationRecord>, _>>()?;
    Ok(Corpus::new(source_label, records))
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    record_id: String,
    title: String,
    year: i32,
    #[serde(rename = "abstract")]
    abstract_text: String,
    addresses: String,
    wos_categories: String,
    research_areas: String,
    doi: String,
    url: String,
}

/// One row per record; list fields are `;`-joined.
pub fn write_csv(corpus: &Corpus) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &corpus.records {
        w.serialize(CsvRow {
            record_id: r.record_id.clone(),
            title: r.title.clone(),
            year: r.year,
            abstract_text: r.abstract_text.clone(),
            addresses: r.addresses.join("; "),
            wos_categories: r.wos_categories.join("; "),
            research_areas: r.research_areas.join("; "),
            doi: r.doi.clone().unwrap_or_default(),
            url: r.url.clone().unwrap_or_default(),
        })
        .expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn read_csv(text: &str, source_label: &str) -> Result<Corpus, CorpusError> {
    let split = |s: &str| -> Vec<String> {
        s.split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    };
    let opt = |s: String| if s.is_empty() { None } else { Some(s) };
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut records = Vec::new();
    for row in rdr.deserialize::<CsvRow>() {
        let row = row.map_err(|e| CorpusError::Serialization(e.to_string()))?;
        records.push(CitationRecord {
            record_id: row.record_id,
            title: row.title,
            year: row.year,
            abstract_text: row.abstract_text,
            addresses: split(&row.addresses),
            wos_categories: split(&row.wos_categories),
            research_areas: split(&row.research_areas),
            doi: opt(row.doi),
            url: opt(row.url),
        });
    }
    Ok(Corpus::new(source_label, records))
}
