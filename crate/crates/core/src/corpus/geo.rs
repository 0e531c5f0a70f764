//! Offline toponym lookup for author addresses.

use super::{CitationRecord, CorpusError};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub const UNRESOLVED_COUNTRY: &str = "UNRESOLVED";

const BUNDLED: &str = include_str!("../../data/gazetteer.tsv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub country: String,
    pub latitude: f64,
    pub longitude: f64,
}

/// Normalized toponym -> location. Lookup is case-insensitive and
/// punctuation-blind; multi-token toponyms match as token runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gazetteer {
    entries: BTreeMap<String, GazetteerEntry>,
    max_tokens: usize,
}

pub fn normalize_toponym(s: &str) -> String {
    tokens(s).join(" ")
}

fn tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl Gazetteer {
    /// Parses the tab-separated `toponym, country, latitude, longitude`
    /// format. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut gaz = Gazetteer::default();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |reason: &str| CorpusError::Gazetteer {
                line: lineno,
                reason: reason.to_string(),
            };
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(err("expected 4 tab-separated columns"));
            }
            let latitude: f64 = cols[2].parse().map_err(|_| err("latitude is not a number"))?;
            let longitude: f64 = cols[3].parse().map_err(|_| err("longitude is not a number"))?;
            if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
                return Err(err("coordinates out of range"));
            }
            let key = normalize_toponym(cols[0]);
            if key.is_empty() || cols[1].is_empty() {
                return Err(err("empty toponym or country"));
            }
            gaz.insert(
                &key,
                GazetteerEntry {
                    country: cols[1].to_string(),
                    latitude,
                    longitude,
                },
            )
            .map_err(|_| err("toponym listed twice"))?;
        }
        if gaz.is_empty() {
            return Err(CorpusError::EmptyGazetteer);
        }
        Ok(gaz)
    }

    /// The gazetteer shipped with the crate: countries as they appear in
    /// export address lines plus a set of frequent cities.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled gazetteer is valid")
    }

    fn insert(&mut self, toponym: &str, entry: GazetteerEntry) -> Result<(), ()> {
        let key = normalize_toponym(toponym);
        if self.entries.contains_key(&key) {
            return Err(());
        }
        self.max_tokens = self.max_tokens.max(key.split(' ').count());
        self.entries.insert(key, entry);
        Ok(())
    }

    pub fn get(&self, toponym: &str) -> Option<&GazetteerEntry> {
        self.entries.get(&normalize_toponym(toponym))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn countries(&self) -> BTreeSet<&str> {
        self.entries.values().map(|e| e.country.as_str()).collect()
    }

    /// Longest token run of `text` present in the gazetteer; among equally
    /// long matches the rightmost wins.
    pub fn lookup(&self, text: &str) -> Option<&GazetteerEntry> {
        let toks = tokens(text);
        for width in (1..=self.max_tokens.min(toks.len())).rev() {
            for start in (0..=toks.len() - width).rev() {
                if let Some(e) = self.entries.get(&toks[start..start + width].join(" ")) {
                    return Some(e);
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub country: String,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
    pub resolved: bool,
}

impl GeoPoint {
    pub fn unresolved() -> Self {
        Self {
            country: UNRESOLVED_COUNTRY.to_string(),
            latitude: None,
            longitude: None,
            resolved: false,
        }
    }
}

/// Strips the `[Author, A; Author, B]` prefix exports put on address lines.
fn strip_author_group(address: &str) -> &str {
    let trimmed = address.trim_start();
    if trimmed.starts_with('[') {
        if let Some(end) = trimmed.find(']') {
            return &trimmed[end + 1..];
        }
    }
    trimmed
}

/// Geocodes the first author address of `record`.
pub fn geocode_record(record: &CitationRecord, gazetteer: &Gazetteer) -> GeoPoint {
    let Some(first) = record.addresses.first() else {
        return GeoPoint::unresolved();
    };
    match gazetteer.lookup(strip_author_group(first)) {
        Some(e) => GeoPoint {
            country: e.country.clone(),
            latitude: Some(e.latitude),
            longitude: Some(e.longitude),
            resolved: true,
        },
        None => GeoPoint::unresolved(),
    }
}
