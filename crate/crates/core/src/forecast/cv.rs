//! Repeated k-fold cross-validation.
//!
//! Repeat `r` shuffles with `stream_rng(seed, r)`. LR2 folds are drawn
//! within each direction and MLM folds within each discipline, so every
//! training split keeps every group.

use super::linear::{fit_linear, fit_lr2_rows, RegressionFit};
use super::mixed::{fit_mixed_rows, MixedModelFit};
use super::{ForecastError, ModelKind, ObsRow};
use crate::par::{stream_rng, Execution};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CvMetrics {
    pub r2: f64,
    pub rmsfe: f64,
    pub mafe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub model_name: ModelKind,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Number of fold evaluations, each with its own fitted model.
    pub fitted_models: usize,
    pub train: CvMetrics,
    pub test: CvMetrics,
    /// Evaluations whose R² was undefined (zero variance) and left out of
    /// the R² mean.
    pub flagged_train_r2: usize,
    pub flagged_test_r2: usize,
    /// Mixed-model fits that reached the iteration cap.
    #[serde(default)]
    pub unconverged_fits: usize,
}

/// Fold index of each row for repeat `repeat`.
pub fn cv_partitions(rows: &[ObsRow], model: ModelKind, folds: usize, seed: u64, repeat: usize) -> Vec<usize> {
    let mut rng = stream_rng(seed, repeat as u64);
    let mut strata: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let key = match model {
            ModelKind::LR1 => "",
            ModelKind::LR2 => r.direction.as_str(),
            ModelKind::MLM => r.discipline.as_str(),
        };
        strata.entry(key).or_default().push(i);
    }
    let mut assignment = vec![0; rows.len()];
    let mut offset = 0;
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            assignment[i] = (offset + j) % folds;
        }
        offset = (offset + members.len()) % folds;
    }
    assignment
}

enum Fitted {
    Pooled(RegressionFit),
    PerDirection(BTreeMap<String, RegressionFit>),
    Mixed(MixedModelFit),
}

impl Fitted {
    fn predict(&self, row: &ObsRow) -> f64 {
        match self {
            Fitted::Pooled(f) => f.predict(row.year),
            Fitted::PerDirection(m) => m[&row.direction].predict(row.year),
            Fitted::Mixed(f) => f.predict(row.year, &row.discipline),
        }
    }
}

fn fit(model: ModelKind, rows: &[&ObsRow]) -> Result<Fitted, ForecastError> {
    Ok(match model {
        ModelKind::LR1 => {
            let pts: Vec<(i32, f64)> = rows.iter().map(|r| (r.year, r.count)).collect();
            Fitted::Pooled(fit_linear(&pts, None)?)
        }
        ModelKind::LR2 => Fitted::PerDirection(fit_lr2_rows(rows)?),
        ModelKind::MLM => Fitted::Mixed(fit_mixed_rows(rows)?),
    })
}

/// Metrics of predictions against observations; R² is `None` when the
/// observations have zero variance.
fn metrics(observed: &[f64], predicted: &[f64]) -> (Option<f64>, f64, f64) {
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let sst: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
    let sse: f64 = observed.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    let mae: f64 = observed.iter().zip(predicted).map(|(y, p)| (y - p).abs()).sum::<f64>() / n;
    let r2 = (sst > 0.0).then(|| 1.0 - sse / sst);
    (r2, (sse / n).sqrt(), mae)
}

struct Evaluation {
    train: (Option<f64>, f64, f64),
    test: (Option<f64>, f64, f64),
    converged: bool,
}

fn evaluate(rows: &[ObsRow], model: ModelKind, assignment: &[usize], fold: usize) -> Result<Evaluation, ForecastError> {
    let (mut test, mut train) = (Vec::new(), Vec::new());
    for (r, &f) in rows.iter().zip(assignment) {
        if f == fold { test.push(r) } else { train.push(r) }
    }
    if test.is_empty() {
        return Err(ForecastError::InsufficientRows(format!("fold {fold} is empty")));
    }
    let model_fit = fit(model, &train).map_err(|e| ForecastError::InsufficientRows(format!("training fold {fold}: {e}")))?;
    let score = |set: &[&ObsRow]| {
        let obs: Vec<f64> = set.iter().map(|r| r.count).collect();
        let pred: Vec<f64> = set.iter().map(|r| model_fit.predict(r)).collect();
        metrics(&obs, &pred)
    };
    Ok(Evaluation {
        train: score(&train),
        test: score(&test),
        converged: !matches!(&model_fit, Fitted::Mixed(m) if !m.converged),
    })
}

fn average(evals: &[(Option<f64>, f64, f64)]) -> (CvMetrics, usize) {
    let n = evals.len() as f64;
    let r2s: Vec<f64> = evals.iter().filter_map(|e| e.0).collect();
    let flagged = evals.len() - r2s.len();
    let r2 = if r2s.is_empty() {
        0.0
    } else {
        r2s.iter().sum::<f64>() / r2s.len() as f64
    };
    (
        CvMetrics {
            r2,
            rmsfe: evals.iter().map(|e| e.1).sum::<f64>() / n,
            mafe: evals.iter().map(|e| e.2).sum::<f64>() / n,
        },
        flagged,
    )
}

pub fn cross_validate(
    rows: &[ObsRow],
    model: ModelKind,
    folds: usize,
    repeats: usize,
    seed: u64,
) -> Result<CvReport, ForecastError> {
    cross_validate_with(rows, model, folds, repeats, seed, Execution::default())
}

/// Both schedules produce identical reports: evaluations are collected in
/// `(repeat, fold)` order before averaging.
pub fn cross_validate_with(
    rows: &[ObsRow],
    model: ModelKind,
    folds: usize,
    repeats: usize,
    seed: u64,
    exec: Execution,
) -> Result<CvReport, ForecastError> {
    if folds < 2 || repeats == 0 {
        return Err(ForecastError::InsufficientRows(format!(
            "need folds >= 2 and repeats >= 1, got {folds} x {repeats}"
        )));
    }
    if rows.len() < folds {
        return Err(ForecastError::InsufficientRows(format!("{} rows for {folds} folds", rows.len())));
    }
    let partitions: Vec<Vec<usize>> = exec.map_indexed(repeats, |r| cv_partitions(rows, model, folds, seed, r));
    let evals = exec.map_indexed(folds * repeats, |i| evaluate(rows, model, &partitions[i / folds], i % folds));
    let evals = evals.into_iter().collect::<Result<Vec<_>, _>>()?;
    let (train, flagged_train_r2) = average(&evals.iter().map(|e| e.train).collect::<Vec<_>>());
    let (test, flagged_test_r2) = average(&evals.iter().map(|e| e.test).collect::<Vec<_>>());
    let unconverged_fits = evals.iter().filter(|e| !e.converged).count();
    if unconverged_fits > 0 {
        log::warn!("{model}: {unconverged_fits} of {} fits stopped at the iteration cap", evals.len());
    }
    Ok(CvReport {
        model_name: model,
        folds,
        repeats,
        seed,
        fitted_models: evals.len(),
        train,
        test,
        flagged_train_r2,
        flagged_test_r2,
        unconverged_fits,
    })
}

pub fn reports_to_csv(reports: &[CvReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "model", "folds", "repeats", "seed", "train_r2", "train_rmsfe", "train_mafe", "test_r2", "test_rmsfe",
        "test_mafe", "flagged_test_r2",
    ])
    .expect("in-memory write");
    for r in reports {
        w.write_record([
            r.model_name.to_string(),
            r.folds.to_string(),
            r.repeats.to_string(),
            r.seed.to_string(),
            r.train.r2.to_string(),
            r.train.rmsfe.to_string(),
            r.train.mafe.to_string(),
            r.test.r2.to_string(),
            r.test.rmsfe.to_string(),
            r.test.mafe.to_string(),
            r.flagged_test_r2.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
