//! Topic modelling of citing documents and their mapping onto a
//! discipline / research-direction taxonomy.

mod labels;
mod lda;
mod persist;

pub use labels::{apply_label_map, LabelMap, LabeledDoc, Taxonomy};
pub use lda::{
    dominant_topic, dominant_topics, fit_lda, perplexity, perplexity_with, select_topic_count,
    select_topic_count_with, top_words, LdaParams, LdaSettings, TopicCountSelection, TopicModel,
};
pub use persist::{read_model, write_model};

use crate::corpus::CitationRecord;
use std::collections::{HashMap, HashSet};

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TopicError {
    #[error("document {doc_id} has no tokens after preprocessing")]
    EmptyDocument { doc_id: String },
    #[error("{docs} documents is too few for {k} topics")]
    TooFewDocuments { docs: usize, k: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("token index {token} outside vocabulary of size {vocab_size}")]
    VocabularyMismatch { token: usize, vocab_size: usize },
    #[error("document index {index} out of range ({len} documents)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("topic {0} has no label")]
    UnmappedTopic(usize),
    #[error("label {0:?} is not in the taxonomy")]
    UnknownLabel(String),
    #[error("invalid topic-count candidates: {0}")]
    InvalidCandidates(String),
    #[error("config: {0}")]
    Config(String),
    #[error("model file line {line}: {reason}")]
    ModelFormat { line: usize, reason: String },
}

/// A document as vocabulary indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenDoc {
    pub doc_id: String,
    pub tokens: Vec<usize>,
}

impl TokenDoc {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Word <-> index map, grown in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Self {
        let mut v = Self::new();
        for w in words {
            v.intern(&w);
        }
        v
    }

    pub fn intern(&mut self, word: &str) -> usize {
        if let Some(&i) = self.index.get(word) {
            return i;
        }
        let i = self.words.len();
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), i);
        i
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.words.get(index).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

/// English function words plus boilerplate common in abstracts.
pub fn bundled_stopwords() -> HashSet<String> {
    parse_stopwords(BUNDLED_STOPWORDS)
}

/// Lowercased alphanumeric runs of at least three characters that are not
/// stopwords.
pub fn tokenize<'a>(text: &'a str, stopwords: &'a HashSet<String>) -> impl Iterator<Item = String> + 'a {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 3)
        .map(str::to_lowercase)
        .filter(move |t| !stopwords.contains(t))
}

/// Title followed by abstract, tokenized into `vocab`.
pub fn preprocess(
    record: &CitationRecord,
    stopwords: &HashSet<String>,
    vocab: &mut Vocabulary,
) -> Result<TokenDoc, TopicError> {
    let text = format!("{} {}", record.title, record.abstract_text);
    let tokens: Vec<usize> = tokenize(&text, stopwords).map(|t| vocab.intern(&t)).collect();
    if tokens.is_empty() {
        return Err(TopicError::EmptyDocument {
            doc_id: record.record_id.clone(),
        });
    }
    Ok(TokenDoc {
        doc_id: record.record_id.clone(),
        tokens,
    })
}
