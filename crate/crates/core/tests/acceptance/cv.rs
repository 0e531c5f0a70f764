use crate::{ensure, Check};
use difftree::forecast::{cross_validate, cv_partitions, CvMetrics, ModelKind, ObsRow};
use std::collections::BTreeMap;

fn rows() -> Vec<ObsRow> {
    // 4 directions x 10 years with deterministic wiggles
    (0..40)
        .map(|i| {
            let d = i / 10;
            let t = i % 10;
            let wiggle = ((i * 7919) % 13) as f64 / 4.0 - 1.5;
            ObsRow {
                direction: format!("r{d}"),
                discipline: format!("D{}", d / 2),
                year: 2011 + t,
                count: (1.0 + d as f64) * t as f64 * 0.7 + wiggle,
            }
        })
        .collect()
}

fn ols(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (sxx, sxy) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 * p.0, a.1 + p.0 * p.1));
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

fn fold_metrics(obs: &[f64], pred: &[f64]) -> (Option<f64>, f64, f64) {
    let n = obs.len() as f64;
    let mean = obs.iter().sum::<f64>() / n;
    let sst: f64 = obs.iter().map(|y| (y - mean) * (y - mean)).sum();
    let sse: f64 = obs.iter().zip(pred).map(|(y, p)| (y - p) * (y - p)).sum();
    let mae = obs.iter().zip(pred).map(|(y, p)| (y - p).abs()).sum::<f64>() / n;
    ((sst > 0.0).then(|| 1.0 - sse / sst), (sse / n).sqrt(), mae)
}

/// Per-fold fits and metrics from scratch, averaged the same way.
fn naive(rows: &[ObsRow], model: ModelKind, folds: usize, repeats: usize, seed: u64) -> Result<(CvMetrics, CvMetrics, usize), String> {
    let mut train_m = Vec::new();
    let mut test_m = Vec::new();
    for r in 0..repeats {
        let assignment = cv_partitions(rows, model, folds, seed, r);
        let mut sizes = vec![0usize; folds];
        for &f in &assignment {
            sizes[f] += 1;
        }
        if sizes.iter().max().unwrap_or(&0) - sizes.iter().min().unwrap_or(&0) > 1 {
            return Err(format!("repeat {r}: unbalanced folds {sizes:?}"));
        }
        for fold in 0..folds {
            let train: Vec<&ObsRow> = rows.iter().zip(&assignment).filter(|(_, &f)| f != fold).map(|(r, _)| r).collect();
            let test: Vec<&ObsRow> = rows.iter().zip(&assignment).filter(|(_, &f)| f == fold).map(|(r, _)| r).collect();
            let mut fits: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
            match model {
                ModelKind::LR1 => {
                    let pts: Vec<(f64, f64)> = train.iter().map(|r| (r.year as f64, r.count)).collect();
                    let f = ols(&pts);
                    for r in rows {
                        fits.insert(&r.direction, f);
                    }
                }
                _ => {
                    let mut by_dir: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
                    for r in &train {
                        by_dir.entry(&r.direction).or_default().push((r.year as f64, r.count));
                    }
                    for (d, pts) in by_dir {
                        fits.insert(d, ols(&pts));
                    }
                }
            }
            let score = |set: &[&ObsRow]| {
                let obs: Vec<f64> = set.iter().map(|r| r.count).collect();
                let pred: Vec<f64> = set
                    .iter()
                    .map(|r| {
                        let (s, i) = fits[r.direction.as_str()];
                        i + s * r.year as f64
                    })
                    .collect();
                fold_metrics(&obs, &pred)
            };
            train_m.push(score(&train));
            test_m.push(score(&test));
        }
    }
    let avg = |m: &[(Option<f64>, f64, f64)]| {
        let r2s: Vec<f64> = m.iter().filter_map(|x| x.0).collect();
        CvMetrics {
            r2: r2s.iter().sum::<f64>() / r2s.len() as f64,
            rmsfe: m.iter().map(|x| x.1).sum::<f64>() / m.len() as f64,
            mafe: m.iter().map(|x| x.2).sum::<f64>() / m.len() as f64,
        }
    };
    Ok((avg(&train_m), avg(&test_m), train_m.len()))
}

fn close(a: &CvMetrics, b: &CvMetrics) -> bool {
    (a.r2 - b.r2).abs() < 1e-9 && (a.rmsfe - b.rmsfe).abs() < 1e-9 && (a.mafe - b.mafe).abs() < 1e-9
}

pub fn check() -> Check {
    let rows = rows();
    for model in [ModelKind::LR1, ModelKind::LR2] {
        let a = cross_validate(&rows, model, 10, 100, 2024).map_err(|e| e.to_string())?;
        let b = cross_validate(&rows, model, 10, 100, 2024).map_err(|e| e.to_string())?;
        let (ja, jb) = (serde_json::to_string(&a).expect("json"), serde_json::to_string(&b).expect("json"));
        ensure!(ja == jb, "{model}: reruns differ");
        ensure!(a.fitted_models == 1000, "{model}: {} fitted models", a.fitted_models);
        let (train, test, fitted) = naive(&rows, model, 10, 100, 2024)?;
        ensure!(fitted == 1000, "naive recomputation fitted {fitted}");
        ensure!(close(&a.train, &train), "{model}: train {:?} vs naive {:?}", a.train, train);
        ensure!(close(&a.test, &test), "{model}: test {:?} vs naive {:?}", a.test, test);
    }
    let mlm = cross_validate(&rows, ModelKind::MLM, 10, 100, 2024).map_err(|e| e.to_string())?;
    let again = cross_validate(&rows, ModelKind::MLM, 10, 100, 2024).map_err(|e| e.to_string())?;
    ensure!(
        serde_json::to_string(&mlm).expect("json") == serde_json::to_string(&again).expect("json"),
        "MLM reruns differ"
    );
    ensure!(mlm.fitted_models == 1000, "MLM: {} fitted models", mlm.fitted_models);
    Ok("10 x 100 byte-identical for LR1/LR2/MLM, 1000 fits each, LR1/LR2 equal the naive recomputation".into())
}
