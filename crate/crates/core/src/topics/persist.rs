//! Plain-text model files.
//!
//! ```text
//! difftree-topic-model 1
//! k 3
//! vocab_size 120
//! alpha 16.666666666666668
//! beta 0.01
//! seed 42
//! iterations 1000
//! docs 2
//! doc <id> <theta_0> ... <theta_k-1>
//! doc <id> ...
//! topic <phi_0> ... <phi_V-1>
//! ...
//! z <topic of token 0> <topic of token 1> ...   (one line per doc)
//! ```
//!
//! Floats use the shortest representation that parses back to the same
//! value, so a written model reloads bit-identically.

use super::{LdaParams, TopicError, TopicModel};
use std::fmt::Write as _;

const MAGIC: &str = "difftree-topic-model 1";

pub fn write_model(model: &TopicModel) -> String {
    let p = &model.params;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "k {}", p.k);
    let _ = writeln!(out, "vocab_size {}", model.vocab_size);
    let _ = writeln!(out, "alpha {}", p.alpha);
    let _ = writeln!(out, "beta {}", p.beta);
    let _ = writeln!(out, "seed {}", p.seed);
    let _ = writeln!(out, "iterations {}", p.iterations);
    let _ = writeln!(out, "docs {}", model.doc_ids.len());
    let join = |row: &[f64]| row.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    for (id, row) in model.doc_ids.iter().zip(&model.doc_topic) {
        let _ = writeln!(out, "doc {id} {}", join(row));
    }
    for row in &model.topic_word {
        let _ = writeln!(out, "topic {}", join(row));
    }
    for z in &model.assignments {
        let zs: Vec<String> = z.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "z {}", zs.join(" ").trim_end());
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, reason: impl Into<String>) -> TopicError {
        TopicError::ModelFormat {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn next_with(&mut self, key: &str) -> Result<&'a str, TopicError> {
        let (i, line) = self.inner.next().ok_or_else(|| self.err("unexpected end of file"))?;
        self.line = i + 1;
        let rest = line
            .strip_prefix(key)
            .ok_or_else(|| self.err(format!("expected {key:?}")))?;
        if !(rest.is_empty() || rest.starts_with(' ')) {
            return Err(self.err(format!("expected {key:?}")));
        }
        Ok(rest.trim_start())
    }

    fn value<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, TopicError> {
        let raw = self.next_with(key)?;
        raw.trim().parse().map_err(|_| self.err(format!("bad value for {key}")))
    }

    fn floats(&self, raw: &str, n: usize) -> Result<Vec<f64>, TopicError> {
        let row = raw
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| self.err("bad number"))?;
        if row.len() != n {
            return Err(self.err(format!("expected {n} values, found {}", row.len())));
        }
        Ok(row)
    }
}

pub fn read_model(text: &str) -> Result<TopicModel, TopicError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if !lines.next_with(MAGIC)?.is_empty() {
        return Err(lines.err("bad header"));
    }
    let k: usize = lines.value("k")?;
    let vocab_size: usize = lines.value("vocab_size")?;
    let alpha: f64 = lines.value("alpha")?;
    let beta: f64 = lines.value("beta")?;
    let seed: u64 = lines.value("seed")?;
    let iterations: usize = lines.value("iterations")?;
    let docs: usize = lines.value("docs")?;

    let mut doc_ids = Vec::with_capacity(docs);
    let mut doc_topic = Vec::with_capacity(docs);
    for _ in 0..docs {
        let raw = lines.next_with("doc")?;
        let (id, rest) = raw.split_once(' ').unwrap_or((raw, ""));
        doc_ids.push(id.to_string());
        doc_topic.push(lines.floats(rest, k)?);
    }
    let mut topic_word = Vec::with_capacity(k);
    for _ in 0..k {
        let raw = lines.next_with("topic")?;
        topic_word.push(lines.floats(raw, vocab_size)?);
    }
    let mut assignments = Vec::with_capacity(docs);
    for _ in 0..docs {
        let raw = lines.next_with("z")?;
        let z = raw
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<u32>, _>>()
            .map_err(|_| lines.err("bad topic index"))?;
        if z.iter().any(|&t| t as usize >= k) {
            return Err(lines.err("topic index out of range"));
        }
        assignments.push(z);
    }
    Ok(TopicModel {
        params: LdaParams {
            k,
            alpha,
            beta,
            iterations,
            seed,
        },
        vocab_size,
        doc_ids,
        doc_topic,
        topic_word,
        assignments,
    })
}
