//! Latent Dirichlet allocation by collapsed Gibbs sampling.

use super::{TokenDoc, TopicError};
use crate::par::{stream_rng, Execution};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Fold-in sweeps used to estimate topic proportions of unseen documents.
pub const FOLD_IN_SWEEPS: usize = 50;

/// Fit parameters for one topic count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaParams {
    /// `alpha = 50 / k`, `beta = 0.01`, 1000 sweeps.
    pub fn new(k: usize, seed: u64) -> Self {
        LdaSettings::default().params(k, seed)
    }

    fn validate(&self, docs: usize) -> Result<(), TopicError> {
        if self.k < 2 {
            return Err(TopicError::InvalidHyperparameter(format!("k = {} (need >= 2)", self.k)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(TopicError::InvalidHyperparameter(format!("alpha = {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(TopicError::InvalidHyperparameter(format!("beta = {}", self.beta)));
        }
        if self.iterations == 0 {
            return Err(TopicError::InvalidHyperparameter("iterations = 0".into()));
        }
        if docs < self.k {
            return Err(TopicError::TooFewDocuments { docs, k: self.k });
        }
        Ok(())
    }
}

/// Topic-count independent settings; `alpha = None` means `50 / k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaSettings {
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
}

impl Default for LdaSettings {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: 0.01,
            iterations: 1000,
        }
    }
}

impl LdaSettings {
    pub fn params(&self, k: usize, seed: u64) -> LdaParams {
        LdaParams {
            k,
            alpha: self.alpha.unwrap_or(50.0 / k as f64),
            beta: self.beta,
            iterations: self.iterations,
            seed,
        }
    }
}

/// A fitted model: posterior-mean topic proportions per document, word
/// distributions per topic, and the final topic assignment of every token.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub params: LdaParams,
    pub vocab_size: usize,
    pub doc_ids: Vec<String>,
    /// `docs x k`, rows sum to one.
    pub doc_topic: Vec<Vec<f64>>,
    /// `k x vocab_size`, rows sum to one.
    pub topic_word: Vec<Vec<f64>>,
    pub assignments: Vec<Vec<u32>>,
}

impl TopicModel {
    pub fn k(&self) -> usize {
        self.params.k
    }
}

struct GibbsState {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    ndk: Vec<u32>,
    nkw: Vec<u32>,
    nk: Vec<u32>,
    z: Vec<Vec<u32>>,
}

impl GibbsState {
    fn init(docs: &[TokenDoc], v: usize, p: &LdaParams, rng: &mut ChaCha8Rng) -> Self {
        let k = p.k;
        let mut s = GibbsState {
            k,
            v,
            alpha: p.alpha,
            beta: p.beta,
            ndk: vec![0; docs.len() * k],
            nkw: vec![0; k * v],
            nk: vec![0; k],
            z: Vec::with_capacity(docs.len()),
        };
        for (d, doc) in docs.iter().enumerate() {
            let mut zd = Vec::with_capacity(doc.len());
            for &w in &doc.tokens {
                let t = rng.gen_range(0..k);
                s.ndk[d * k + t] += 1;
                s.nkw[t * v + w] += 1;
                s.nk[t] += 1;
                zd.push(t as u32);
            }
            s.z.push(zd);
        }
        s
    }

    fn sweep(&mut self, docs: &[TokenDoc], rng: &mut ChaCha8Rng, weights: &mut [f64]) {
        let (k, v) = (self.k, self.v);
        let vbeta = v as f64 * self.beta;
        for (d, doc) in docs.iter().enumerate() {
            let row = d * k;
            for (n, &w) in doc.tokens.iter().enumerate() {
                let old = self.z[d][n] as usize;
                self.ndk[row + old] -= 1;
                self.nkw[old * v + w] -= 1;
                self.nk[old] -= 1;

                let mut total = 0.0;
                for (t, slot) in weights.iter_mut().enumerate().take(k) {
                    total += (self.ndk[row + t] as f64 + self.alpha) * (self.nkw[t * v + w] as f64 + self.beta)
                        / (self.nk[t] as f64 + vbeta);
                    *slot = total;
                }
                let new = sample_cumulative(weights, total, rng);

                self.ndk[row + new] += 1;
                self.nkw[new * v + w] += 1;
                self.nk[new] += 1;
                self.z[d][n] = new as u32;
            }
        }
    }

    /// Per-topic totals agree whether summed over documents or vocabulary.
    fn counts_consistent(&self) -> bool {
        let docs = self.ndk.len() / self.k;
        (0..self.k).all(|t| {
            let by_doc: u64 = (0..docs).map(|d| self.ndk[d * self.k + t] as u64).sum();
            let by_word: u64 = (0..self.v).map(|w| self.nkw[t * self.v + w] as u64).sum();
            by_doc == self.nk[t] as u64 && by_word == self.nk[t] as u64
        })
    }
}

/// Draws an index from unnormalized cumulative weights.
fn sample_cumulative(cumulative: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let u = rng.gen::<f64>() * total;
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

fn normalize_row(row: &mut [f64]) {
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= s);
}

fn check_vocab(docs: &[TokenDoc], vocab_size: usize) -> Result<(), TopicError> {
    match docs.iter().flat_map(|d| d.tokens.iter()).find(|&&t| t >= vocab_size) {
        Some(&token) => Err(TopicError::VocabularyMismatch { token, vocab_size }),
        None => Ok(()),
    }
}

/// Runs `params.iterations` Gibbs sweeps and returns the smoothed
/// final-state estimates. Output is a pure function of the inputs.
pub fn fit_lda(docs: &[TokenDoc], vocab_size: usize, params: &LdaParams) -> Result<TopicModel, TopicError> {
    params.validate(docs.len())?;
    check_vocab(docs, vocab_size)?;
    let mut rng = stream_rng(params.seed, 0);
    let mut state = GibbsState::init(docs, vocab_size, params, &mut rng);
    let mut weights = vec![0.0; params.k];
    for _ in 0..params.iterations {
        state.sweep(docs, &mut rng, &mut weights);
        debug_assert!(state.counts_consistent(), "Gibbs count bookkeeping diverged");
    }

    let k = params.k;
    let doc_topic = docs
        .iter()
        .enumerate()
        .map(|(d, _)| {
            let mut row: Vec<f64> = (0..k).map(|t| state.ndk[d * k + t] as f64 + params.alpha).collect();
            normalize_row(&mut row);
            row
        })
        .collect();
    let topic_word = (0..k)
        .map(|t| {
            let mut row: Vec<f64> = (0..vocab_size)
                .map(|w| state.nkw[t * vocab_size + w] as f64 + params.beta)
                .collect();
            normalize_row(&mut row);
            row
        })
        .collect();
    Ok(TopicModel {
        params: *params,
        vocab_size,
        doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
        doc_topic,
        topic_word,
        assignments: state.z,
    })
}

/// Topic proportions of `doc` under fixed topic-word distributions.
fn fold_in(model: &TopicModel, doc: &TokenDoc, sweeps: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = model.k();
    let alpha = model.params.alpha;
    let mut ndk = vec![0u32; k];
    let mut z: Vec<usize> = doc
        .tokens
        .iter()
        .map(|_| {
            let t = rng.gen_range(0..k);
            ndk[t] += 1;
            t
        })
        .collect();
    let mut weights = vec![0.0; k];
    for _ in 0..sweeps {
        for (n, &w) in doc.tokens.iter().enumerate() {
            ndk[z[n]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                total += (ndk[t] as f64 + alpha) * model.topic_word[t][w];
                weights[t] = total;
            }
            let new = if total > 0.0 {
                sample_cumulative(&weights, total, rng)
            } else {
                rng.gen_range(0..k)
            };
            ndk[new] += 1;
            z[n] = new;
        }
    }
    let mut theta: Vec<f64> = ndk.iter().map(|&c| c as f64 + alpha).collect();
    normalize_row(&mut theta);
    theta
}

/// `exp(-log-likelihood / tokens)` with per-document proportions folded in
/// by [`FOLD_IN_SWEEPS`] Gibbs sweeps against the fixed topic-word matrix.
pub fn perplexity(model: &TopicModel, docs: &[TokenDoc]) -> Result<f64, TopicError> {
    perplexity_with(model, docs, FOLD_IN_SWEEPS)
}

pub fn perplexity_with(model: &TopicModel, docs: &[TokenDoc], sweeps: usize) -> Result<f64, TopicError> {
    check_vocab(docs, model.vocab_size)?;
    let mut log_lik = 0.0;
    let mut tokens = 0usize;
    for (i, doc) in docs.iter().enumerate() {
        let mut rng = stream_rng(model.params.seed, 1 + i as u64);
        let theta = fold_in(model, doc, sweeps, &mut rng);
        for &w in &doc.tokens {
            let p: f64 = theta.iter().zip(&model.topic_word).map(|(th, row)| th * row[w]).sum();
            log_lik += p.ln();
        }
        tokens += doc.len();
    }
    if tokens == 0 {
        return Err(TopicError::EmptyDocument {
            doc_id: docs.first().map(|d| d.doc_id.clone()).unwrap_or_default(),
        });
    }
    Ok((-log_lik / tokens as f64).exp())
}

/// Argmax of a document's topic proportions; ties go to the lower index.
pub fn dominant_topic(model: &TopicModel, doc_index: usize) -> Result<usize, TopicError> {
    let row = model.doc_topic.get(doc_index).ok_or(TopicError::IndexOutOfRange {
        index: doc_index,
        len: model.doc_topic.len(),
    })?;
    Ok(argmax(row))
}

pub fn dominant_topics(model: &TopicModel) -> Vec<usize> {
    model.doc_topic.iter().map(|row| argmax(row)).collect()
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// The `n` most probable words of each topic, most probable first.
pub fn top_words(model: &TopicModel, n: usize) -> Vec<Vec<(usize, f64)>> {
    model
        .topic_word
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            idx.into_iter().take(n).map(|w| (w, row[w])).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCountSelection {
    pub chosen: usize,
    /// `(k, held-out perplexity)` per candidate.
    pub perplexities: Vec<(usize, f64)>,
    pub train_docs: usize,
    pub heldout_docs: usize,
}

/// Elbow search over ascending topic counts.
///
/// Documents are split 80/20 by a seeded shuffle. Each candidate is fitted on
/// the training part and scored by held-out perplexity; the chosen count is
/// the last candidate before the relative improvement drops below
/// `tolerance`, or the largest candidate if it never does.
pub fn select_topic_count(
    docs: &[TokenDoc],
    vocab_size: usize,
    candidates: &[usize],
    tolerance: f64,
    settings: &LdaSettings,
    seed: u64,
) -> Result<TopicCountSelection, TopicError> {
    select_topic_count_with(docs, vocab_size, candidates, tolerance, settings, seed, Execution::default())
}

pub fn select_topic_count_with(
    docs: &[TokenDoc],
    vocab_size: usize,
    candidates: &[usize],
    tolerance: f64,
    settings: &LdaSettings,
    seed: u64,
    exec: Execution,
) -> Result<TopicCountSelection, TopicError> {
    if candidates.len() < 2 {
        return Err(TopicError::InvalidCandidates("need at least two candidates".into()));
    }
    if candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TopicError::InvalidCandidates("candidates must be strictly ascending".into()));
    }
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(TopicError::InvalidCandidates(format!("tolerance = {tolerance}")));
    }
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(&mut stream_rng(seed, u64::MAX));
    let n_train = (docs.len() * 4).div_ceil(5);
    let mut train_idx = order[..n_train].to_vec();
    let mut test_idx = order[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let train: Vec<TokenDoc> = train_idx.iter().map(|&i| docs[i].clone()).collect();
    let heldout: Vec<TokenDoc> = test_idx.iter().map(|&i| docs[i].clone()).collect();
    if heldout.is_empty() {
        return Err(TopicError::TooFewDocuments {
            docs: docs.len(),
            k: candidates[0],
        });
    }

    let scores = exec.map_slice(candidates, |&k| {
        let model = fit_lda(&train, vocab_size, &settings.params(k, seed))?;
        perplexity(&model, &heldout)
    });
    let perplexities = candidates
        .iter()
        .zip(scores)
        .map(|(&k, p)| p.map(|p| (k, p)))
        .collect::<Result<Vec<_>, _>>()?;

    let chosen = perplexities
        .windows(2)
        .find(|w| (w[0].1 - w[1].1) / w[0].1 < tolerance)
        .map(|w| w[0].0)
        .unwrap_or(candidates[candidates.len() - 1]);
    Ok(TopicCountSelection {
        chosen,
        perplexities,
        train_docs: train.len(),
        heldout_docs: heldout.len(),
    })
}
