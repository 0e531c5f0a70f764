//! Factor q-statistic of stratified heterogeneity and its permutation test.
//!
//! `q = 1 - SSW / SST` with raw sums of squares: the share of the variance
//! of `y` explained by the stratification.

use crate::par::{stream_rng, Execution};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum QError {
    #[error("values and strata differ in length ({values} vs {strata})")]
    LengthMismatch { values: usize, strata: usize },
    #[error("need at least 2 observations, got {0}")]
    TooFewObservations(usize),
    #[error("need at least 2 strata, got {0}")]
    TooFewStrata(usize),
    #[error("all values are equal; q is undefined")]
    ZeroVariance,
    #[error("need at least 99 permutations, got {0}")]
    TooFewPermutations(usize),
    #[error("non-finite value at row {0}")]
    NonFinite(usize),
    #[error("csv line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

/// Values with a parallel list of stratum labels. Strata are stored as
/// dense indices in first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedSample {
    values: Vec<f64>,
    strata: Vec<usize>,
    labels: Vec<String>,
}

impl StratifiedSample {
    pub fn new<S: AsRef<str>>(values: Vec<f64>, strata: &[S]) -> Result<Self, QError> {
        if values.len() != strata.len() {
            return Err(QError::LengthMismatch {
                values: values.len(),
                strata: strata.len(),
            });
        }
        if values.len() < 2 {
            return Err(QError::TooFewObservations(values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(QError::NonFinite(i));
        }
        let mut labels: Vec<String> = Vec::new();
        let mut index = Vec::with_capacity(strata.len());
        for s in strata {
            let s = s.as_ref();
            let i = match labels.iter().position(|l| l == s) {
                Some(i) => i,
                None => {
                    labels.push(s.to_string());
                    labels.len() - 1
                }
            };
            index.push(i);
        }
        if labels.len() < 2 {
            return Err(QError::TooFewStrata(labels.len()));
        }
        Ok(Self {
            values,
            strata: index,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of strata, `L`.
    pub fn strata_count(&self) -> usize {
        self.labels.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stratum_labels(&self) -> &[String] {
        &self.labels
    }

    /// `N_h` per stratum label.
    pub fn stratum_sizes(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for &s in &self.strata {
            *out.entry(self.labels[s].as_str()).or_insert(0) += 1;
        }
        out
    }

    /// Applies `ln(1 + y)`; values must exceed -1.
    pub fn log1p(&self) -> Result<Self, QError> {
        let values: Vec<f64> = self.values.iter().map(|v| v.ln_1p()).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(QError::NonFinite(i));
        }
        Ok(Self {
            values,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QResult {
    pub q: f64,
    pub ssw: f64,
    pub sst: f64,
    /// Set by the permutation test only.
    pub p_value: Option<f64>,
    pub permutations: usize,
    pub seed: Option<u64>,
}

fn ssw_of(values: &[f64], strata: &[usize], l: usize) -> f64 {
    let mut sum = vec![0.0; l];
    let mut count = vec![0usize; l];
    for (&v, &s) in values.iter().zip(strata) {
        sum[s] += v;
        count[s] += 1;
    }
    let means: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| s / c.max(1) as f64).collect();
    values.iter().zip(strata).map(|(v, &s)| (v - means[s]).powi(2)).sum()
}

fn sst_of(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum()
}

fn q_from(ssw: f64, sst: f64) -> f64 {
    (1.0 - ssw / sst).clamp(0.0, 1.0)
}

pub fn q_statistic(sample: &StratifiedSample) -> Result<QResult, QError> {
    let sst = sst_of(&sample.values);
    // relative test so rounding noise on constant data does not pass
    let scale = sample.values.iter().map(|v| v * v).sum::<f64>();
    if sst <= 1e-24 * scale || sst == 0.0 {
        return Err(QError::ZeroVariance);
    }
    let ssw = ssw_of(&sample.values, &sample.strata, sample.labels.len()).min(sst);
    Ok(QResult {
        q: q_from(ssw, sst),
        ssw,
        sst,
        p_value: None,
        permutations: 0,
        seed: None,
    })
}

/// Tolerance under which a permuted q counts as reaching the observed q.
pub const Q_TIE_TOLERANCE: f64 = 1e-12;

pub fn q_permutation_test(sample: &StratifiedSample, n_perm: usize, seed: u64) -> Result<QResult, QError> {
    q_permutation_test_with(sample, n_perm, seed, Execution::default())
}

/// `p = (1 + #{q_perm >= q_obs}) / (1 + n_perm)`, shuffling the stratum
/// assignment. Replicate `i` draws from `stream_rng(seed, i)`, so the
/// result does not depend on the schedule.
pub fn q_permutation_test_with(
    sample: &StratifiedSample,
    n_perm: usize,
    seed: u64,
    exec: Execution,
) -> Result<QResult, QError> {
    if n_perm < 99 {
        return Err(QError::TooFewPermutations(n_perm));
    }
    let observed = q_statistic(sample)?;
    let l = sample.labels.len();
    let hits = exec.map_indexed(n_perm, |i| {
        let mut strata = sample.strata.clone();
        strata.shuffle(&mut stream_rng(seed, i as u64));
        let q = q_from(ssw_of(&sample.values, &strata, l), observed.sst);
        q >= observed.q - Q_TIE_TOLERANCE
    });
    let extreme = hits.iter().filter(|&&h| h).count();
    Ok(QResult {
        p_value: Some((1 + extreme) as f64 / (1 + n_perm) as f64),
        permutations: n_perm,
        seed: Some(seed),
        ..observed
    })
}

/// Reads `value,stratum` rows with a header line.
pub fn read_sample_csv(text: &str) -> Result<StratifiedSample, QError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let (mut values, mut strata) = (Vec::new(), Vec::new());
    for (i, row) in rdr.records().enumerate() {
        let err = |reason: String| QError::Csv { line: i + 2, reason };
        let row = row.map_err(|e| err(e.to_string()))?;
        if row.len() != 2 {
            return Err(err(format!("expected 2 columns, found {}", row.len())));
        }
        values.push(row[0].parse::<f64>().map_err(|_| err(format!("bad value {:?}", &row[0])))?);
        strata.push(row[1].to_string());
    }
    StratifiedSample::new(values, &strata)
}
