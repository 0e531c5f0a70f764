use crate::{ensure, Check};
use difftree::synth::lda_corpus;
use difftree::topics::{dominant_topics, fit_lda, select_topic_count, LdaSettings};

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Best one-to-one matching of fitted to true topics, by exhaustive search
/// (exact maximum-weight assignment for small K).
fn matched_purity(truth: &[usize], fitted: &[usize], k: usize) -> f64 {
    let mut confusion = vec![vec![0usize; k]; k];
    for (&t, &f) in truth.iter().zip(fitted) {
        confusion[f][t] += 1;
    }
    let best = permutations(k)
        .iter()
        .map(|perm| (0..k).map(|f| confusion[f][perm[f]]).sum::<usize>())
        .max()
        .unwrap_or(0);
    best as f64 / truth.len() as f64
}

pub fn check() -> Check {
    let settings = LdaSettings::default();
    let mut notes = Vec::new();
    for (k, n_docs, seed) in [(2usize, 200usize, 11u64), (3, 300, 12), (5, 500, 13)] {
        let corpus = lda_corpus(k, n_docs, 20, 60, 0.9, seed);
        let params = settings.params(k, seed);
        let model = fit_lda(&corpus.docs, corpus.vocab_size, &params).map_err(|e| e.to_string())?;
        for row in model.doc_topic.iter().chain(&model.topic_word) {
            let s: f64 = row.iter().sum();
            ensure!((s - 1.0).abs() < 1e-9, "K={k}: row sums to {s}");
        }
        let purity = matched_purity(&corpus.truth, &dominant_topics(&model), k);
        ensure!(purity >= 0.90, "K={k}: purity {purity:.3}");
        let again = fit_lda(&corpus.docs, corpus.vocab_size, &params).map_err(|e| e.to_string())?;
        ensure!(again == model, "K={k}: refit under the same seed differs");
        notes.push(format!("K={k} purity {purity:.3}"));
    }
    for (k, candidates, seed) in [(2usize, vec![2usize, 3, 4, 5], 21u64), (5, vec![2, 3, 4, 5, 6, 7], 22)] {
        let corpus = lda_corpus(k, 100 * k, 20, 60, 0.9, seed);
        let sel = select_topic_count(&corpus.docs, corpus.vocab_size, &candidates, 0.02, &settings, seed)
            .map_err(|e| e.to_string())?;
        ensure!(sel.chosen == k, "generative K={k}, selected {} from {:?}", sel.chosen, sel.perplexities);
        notes.push(format!("selected {k} of {candidates:?}"));
    }
    Ok(notes.join(", "))
}
