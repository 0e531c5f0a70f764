//! Discipline / research-direction taxonomy and the topic -> direction map.
//!
//! Both are small TOML files written by hand after inspecting topic top
//! words:
//!
//! ```toml
//! # taxonomy.toml
//! [[discipline]]
//! label = "GS"
//! directions = ["R1", "R2"]
//! ```
//!
//! ```toml
//! # labels.toml
//! [topics]
//! 0 = "R1"
//! 1 = "R2"
//! 2 = "R2"   # several topics may share a direction
//! ```

use super::TopicError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    disciplines: Vec<String>,
    directions: Vec<String>,
    direction_to_discipline: BTreeMap<String, String>,
}

#[derive(Deserialize, Serialize)]
struct TaxonomyFile {
    discipline: Vec<DisciplineEntry>,
}

#[derive(Deserialize, Serialize)]
struct DisciplineEntry {
    label: String,
    directions: Vec<String>,
}

impl Taxonomy {
    /// Builds a taxonomy from `(discipline, directions)` groups. Every
    /// direction must belong to exactly one discipline.
    pub fn new<I, D>(groups: I) -> Result<Self, TopicError>
    where
        I: IntoIterator<Item = (String, D)>,
        D: IntoIterator<Item = String>,
    {
        let mut t = Taxonomy {
            disciplines: vec![],
            directions: vec![],
            direction_to_discipline: BTreeMap::new(),
        };
        for (discipline, dirs) in groups {
            if discipline.trim().is_empty() || t.disciplines.contains(&discipline) {
                return Err(TopicError::Config(format!("duplicate or empty discipline {discipline:?}")));
            }
            for dir in dirs {
                if dir.trim().is_empty() || t.direction_to_discipline.contains_key(&dir) {
                    return Err(TopicError::Config(format!(
                        "direction {dir:?} is empty or assigned to more than one discipline"
                    )));
                }
                t.direction_to_discipline.insert(dir.clone(), discipline.clone());
                t.directions.push(dir);
            }
            t.disciplines.push(discipline);
        }
        if t.disciplines.is_empty() {
            return Err(TopicError::Config("taxonomy has no disciplines".into()));
        }
        Ok(t)
    }

    pub fn parse(text: &str) -> Result<Self, TopicError> {
        let file: TaxonomyFile = toml::from_str(text).map_err(|e| TopicError::Config(e.to_string()))?;
        Self::new(file.discipline.into_iter().map(|d| (d.label, d.directions)))
    }

    pub fn to_toml(&self) -> String {
        let file = TaxonomyFile {
            discipline: self
                .disciplines
                .iter()
                .map(|d| DisciplineEntry {
                    label: d.clone(),
                    directions: self
                        .directions
                        .iter()
                        .filter(|r| &self.direction_to_discipline[*r] == d)
                        .cloned()
                        .collect(),
                })
                .collect(),
        };
        toml::to_string(&file).expect("taxonomy serializes")
    }

    /// Disciplines in declaration order.
    pub fn disciplines(&self) -> &[String] {
        &self.disciplines
    }

    pub fn directions(&self) -> &[String] {
        &self.directions
    }

    pub fn discipline_of(&self, direction: &str) -> Option<&str> {
        self.direction_to_discipline.get(direction).map(String::as_str)
    }
}

/// Topic index -> research-direction label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelMap {
    pub topic_to_label: BTreeMap<usize, String>,
}

#[derive(Deserialize, Serialize)]
struct LabelFile {
    topics: BTreeMap<String, String>,
}

impl LabelMap {
    pub fn parse(text: &str) -> Result<Self, TopicError> {
        let file: LabelFile = toml::from_str(text).map_err(|e| TopicError::Config(e.to_string()))?;
        let mut topic_to_label = BTreeMap::new();
        for (k, v) in file.topics {
            let idx: usize = k
                .trim()
                .parse()
                .map_err(|_| TopicError::Config(format!("topic key {k:?} is not an index")))?;
            topic_to_label.insert(idx, v);
        }
        Ok(Self { topic_to_label })
    }

    pub fn to_toml(&self) -> String {
        let file = LabelFile {
            topics: self.topic_to_label.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        };
        toml::to_string(&file).expect("label map serializes")
    }

    /// Checks totality over `0..k` and that every label is a taxonomy
    /// direction.
    pub fn validate(&self, k: usize, taxonomy: &Taxonomy) -> Result<(), TopicError> {
        if let Some(t) = (0..k).find(|t| !self.topic_to_label.contains_key(t)) {
            return Err(TopicError::UnmappedTopic(t));
        }
        match self.topic_to_label.values().find(|l| taxonomy.discipline_of(l).is_none()) {
            Some(l) => Err(TopicError::UnknownLabel(l.clone())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDoc {
    pub doc_id: String,
    pub direction: String,
    pub discipline: String,
}

/// Attaches a direction (via the label map) and a discipline (via the
/// taxonomy) to each `(doc_id, topic)` pair.
pub fn apply_label_map(
    assignments: &[(String, usize)],
    map: &LabelMap,
    taxonomy: &Taxonomy,
) -> Result<Vec<LabeledDoc>, TopicError> {
    assignments
        .iter()
        .map(|(doc_id, topic)| {
            let direction = map.topic_to_label.get(topic).ok_or(TopicError::UnmappedTopic(*topic))?;
            let discipline = taxonomy
                .discipline_of(direction)
                .ok_or_else(|| TopicError::UnknownLabel(direction.clone()))?;
            Ok(LabeledDoc {
                doc_id: doc_id.clone(),
                direction: direction.clone(),
                discipline: discipline.to_string(),
            })
        })
        .collect()
}
