//! Tagged plain-text export format.
//!
//! Each field line starts with a two-character tag and a space; continuation
//! lines are indented. A record opens with `PT` and closes with `ER`, and the
//! file closes with `EF`. `FN`/`VR` form the file header.
//!
//! Multi-line `TI`/`AB`/`WC`/`SC`/`DI` values are joined with single spaces;
//! `WC` and `SC` are then split on `;`. Every physical `C1` line is one
//! address, matching how exports lay out multi-affiliation records.

use super::{CitationRecord, Corpus, CorpusError};
use chrono::Datelike;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseWarning {
    /// Record had no `PY`; excluded.
    MissingYear { record_id: String, line: usize },
    /// `PY` was present but not a usable year; excluded.
    InvalidYear { record_id: String, value: String, line: usize },
    /// Title empty after whitespace normalization; excluded.
    EmptyTitle { record_id: String, line: usize },
    /// Repeated `UT`; the later record got a positional id.
    DuplicateRecordId { record_id: String, line: usize },
    /// Non-blank text after `EF`; ignored.
    TrailingContent { line: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedExport {
    pub corpus: Corpus,
    pub warnings: Vec<ParseWarning>,
    /// `ER`-terminated blocks seen, including excluded ones.
    pub blocks: usize,
}

#[derive(Default)]
struct RawRecord {
    start_line: usize,
    fields: BTreeMap<String, Vec<String>>,
    last_tag: Option<String>,
}

impl RawRecord {
    fn push(&mut self, tag: &str, value: &str) {
        self.fields.entry(tag.to_string()).or_default().push(value.trim().to_string());
        self.last_tag = Some(tag.to_string());
    }

    fn joined(&self, tag: &str) -> Option<String> {
        self.fields
            .get(tag)
            .map(|lines| lines.join(" ").split_whitespace().collect::<Vec<_>>().join(" "))
    }

    fn list(&self, tag: &str) -> Vec<String> {
        self.joined(tag)
            .map(|s| {
                s.split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default()
    }

    fn lines(&self, tag: &str) -> Vec<String> {
        self.fields
            .get(tag)
            .map(|lines| {
                lines
                    .iter()
                    .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
                    .filter(|l| !l.is_empty())
                    .collect()
            })
            .unwrap_or_default()
    }
}

fn split_tag(line: &str) -> Option<(&str, &str)> {
    let bytes = line.as_bytes();
    if bytes.len() < 2 || !bytes[0].is_ascii_uppercase() {
        return None;
    }
    if !(bytes[1].is_ascii_uppercase() || bytes[1].is_ascii_digit()) {
        return None;
    }
    match bytes.get(2) {
        None => Some((&line[..2], "")),
        Some(b' ') | Some(b'\t') => Some((&line[..2], &line[3..])),
        _ => None,
    }
}

fn is_continuation(line: &str) -> bool {
    line.starts_with("  ") || line.starts_with('\t')
}

pub fn parse_wos_plaintext(text: &str) -> Result<ParsedExport, CorpusError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    let malformed = |line: usize, reason: &str| CorpusError::MalformedRecord {
        line,
        reason: reason.to_string(),
    };

    let max_year = chrono::Utc::now().year();
    let mut current: Option<RawRecord> = None;
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut ids = HashSet::new();
    let mut blocks = 0;

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    while let Some((lineno, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        if is_continuation(line) {
            let rec = current
                .as_mut()
                .ok_or_else(|| malformed(lineno, "continuation line outside a record"))?;
            let tag = rec
                .last_tag
                .clone()
                .ok_or_else(|| malformed(lineno, "continuation line before any field"))?;
            rec.push(&tag, line);
            continue;
        }
        let (tag, value) = split_tag(line).ok_or_else(|| malformed(lineno, "unrecognized line"))?;
        match (tag, current.is_some()) {
            ("ER", true) => {
                blocks += 1;
                let raw = current.take().expect("checked");
                if let Some(rec) = finish_record(raw, blocks, max_year, &mut ids, &mut warnings) {
                    records.push(rec);
                }
            }
            ("ER", false) => return Err(malformed(lineno, "ER without an open record")),
            ("EF", true) => return Err(malformed(lineno, "EF inside a record (missing ER)")),
            ("EF", false) => {
                if let Some((trailing, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
                    log::warn!("ignoring content after EF starting at line {trailing}");
                    warnings.push(ParseWarning::TrailingContent { line: trailing });
                }
                break;
            }
            ("PT", true) => return Err(malformed(lineno, "PT inside a record (missing ER)")),
            ("PT", false) => {
                let mut rec = RawRecord {
                    start_line: lineno,
                    ..Default::default()
                };
                rec.push(tag, value);
                current = Some(rec);
            }
            ("FN" | "VR", false) => {}
            (_, false) => return Err(malformed(lineno, "tag line before any record start")),
            (_, true) => current.as_mut().expect("checked").push(tag, value),
        }
    }
    if let Some(raw) = current {
        return Err(malformed(raw.start_line, "record not terminated by ER"));
    }
    Ok(ParsedExport {
        corpus: Corpus::new(String::new(), records),
        warnings,
        blocks,
    })
}

fn finish_record(
    raw: RawRecord,
    ordinal: usize,
    max_year: i32,
    ids: &mut HashSet<String>,
    warnings: &mut Vec<ParseWarning>,
) -> Option<CitationRecord> {
    let line = raw.start_line;
    let positional = format!("REC-{ordinal:06}");
    let record_id = match raw.joined("UT").filter(|s| !s.is_empty()) {
        Some(ut) if ids.contains(&ut) => {
            warnings.push(ParseWarning::DuplicateRecordId { record_id: ut, line });
            positional
        }
        Some(ut) => ut,
        None => positional,
    };
    let record_id = if ids.contains(&record_id) {
        format!("{record_id}-{ordinal}")
    } else {
        record_id
    };

    let year = match raw.joined("PY") {
        None => {
            warnings.push(ParseWarning::MissingYear { record_id, line });
            return None;
        }
        Some(value) => match value.parse::<i32>() {
            Ok(y) if y > 1900 && y <= max_year => y,
            _ => {
                warnings.push(ParseWarning::InvalidYear { record_id, value, line });
                return None;
            }
        },
    };
    let title = raw.joined("TI").unwrap_or_default();
    if title.is_empty() {
        warnings.push(ParseWarning::EmptyTitle { record_id, line });
        return None;
    }
    ids.insert(record_id.clone());
    Some(CitationRecord {
        record_id,
        title,
        year,
        abstract_text: raw.joined("AB").unwrap_or_default(),
        addresses: raw.lines("C1"),
        wos_categories: raw.list("WC"),
        research_areas: raw.list("SC"),
        doi: raw.joined("DI").filter(|s| !s.is_empty()),
        url: raw.joined("UR").filter(|s| !s.is_empty()),
    })
}

/// Re-emits a corpus in the tagged format; parsing the output yields
/// field-equal records.
pub fn to_wos_plaintext(corpus: &Corpus) -> String {
    let mut out = String::from("FN difftree export\nVR 1.0\n");
    let one_line = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
    for r in &corpus.records {
        out.push_str("PT J\n");
        let _ = writeln!(out, "UT {}", one_line(&r.record_id));
        let _ = writeln!(out, "TI {}", one_line(&r.title));
        let _ = writeln!(out, "PY {}", r.year);
        if !r.abstract_text.trim().is_empty() {
            let _ = writeln!(out, "AB {}", one_line(&r.abstract_text));
        }
        for (i, addr) in r.addresses.iter().enumerate() {
            let lead = if i == 0 { "C1" } else { "  " };
            let _ = writeln!(out, "{lead} {}", one_line(addr));
        }
        if !r.wos_categories.is_empty() {
            let _ = writeln!(out, "WC {}", r.wos_categories.join("; "));
        }
        if !r.research_areas.is_empty() {
            let _ = writeln!(out, "SC {}", r.research_areas.join("; "));
        }
        if let Some(doi) = &r.doi {
            let _ = writeln!(out, "DI {doi}");
        }
        if let Some(url) = &r.url {
            let _ = writeln!(out, "UR {url}");
        }
        out.push_str("ER\n\n");
    }
    out.push_str("EF\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = "FN Clarivate Analytics Web of Science
VR 1.0
PT J
AU Smith, A
TI Geo
   detector study
PY 2016
AB Some abstract
   spanning lines.
C1 [Smith, A] Peking Univ, Beijing 100871, Peoples R China.
   [Li, X] Delft Univ Technol, Delft, Netherlands.
WC Geography, Physical; Environmental
   Sciences
SC Physical Geography; Environmental Sciences & Ecology
DI 10.1016/j.x.2016.01.001
UT WOS:000001
ER

PT J
TI Second record
PY 2017
ER

EF
";

    #[test]
    fn parses_two_records() {
        let parsed = parse_wos_plaintext(TWO).unwrap();
        assert_eq!(parsed.blocks, 2);
        assert!(parsed.warnings.is_empty());
        let r = &parsed.corpus.records;
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].title, "Geo detector study");
        assert_eq!(r[0].abstract_text, "Some abstract spanning lines.");
        assert_eq!(r[0].addresses.len(), 2);
        assert_eq!(r[0].wos_categories, ["Geography, Physical", "Environmental Sciences"]);
        assert_eq!(r[0].record_id, "WOS:000001");
        assert_eq!(r[1].abstract_text, "");
        assert_eq!(r[1].record_id, "REC-000002");
        assert_eq!(r[1].doi, None);
    }

    #[test]
    fn trailing_text_after_ef_is_one_warning() {
        let text = format!("{TWO}junk\nmore junk\n");
        let parsed = parse_wos_plaintext(&text).unwrap();
        assert_eq!(parsed.corpus.len(), 2);
        assert_eq!(parsed.warnings.len(), 1);
        assert!(matches!(parsed.warnings[0], ParseWarning::TrailingContent { .. }));
    }

    #[test]
    fn errors() {
        assert_eq!(parse_wos_plaintext(" \n\n"), Err(CorpusError::EmptyInput));
        assert!(matches!(
            parse_wos_plaintext("TI lonely\nER\nEF\n"),
            Err(CorpusError::MalformedRecord { line: 1, .. })
        ));
        assert!(matches!(
            parse_wos_plaintext("PT J\nTI open\nPY 2012\nEF\n"),
            Err(CorpusError::MalformedRecord { line: 4, .. })
        ));
        assert!(matches!(
            parse_wos_plaintext("PT J\nTI open\nPY 2012\n"),
            Err(CorpusError::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn bad_year_is_reported_not_dropped_silently() {
        let parsed = parse_wos_plaintext("PT J\nTI a\nPY 20x1\nER\nPT J\nTI b\nER\nEF\n").unwrap();
        assert!(parsed.corpus.is_empty());
        assert_eq!(parsed.blocks, 2);
        assert!(matches!(parsed.warnings[0], ParseWarning::InvalidYear { .. }));
        assert!(matches!(parsed.warnings[1], ParseWarning::MissingYear { .. }));
    }

    #[test]
    fn round_trip() {
        let parsed = parse_wos_plaintext(TWO).unwrap();
        let again = parse_wos_plaintext(&to_wos_plaintext(&parsed.corpus)).unwrap();
        assert_eq!(parsed.corpus.records, again.corpus.records);
    }
}
