use crate::{ensure, Check};
use difftree::forecast::{cross_validate, fit_linear, fit_mixed, MixedModelFit, MixedOptions, ModelKind, ObsRow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn mixed_fixture(seed: u64, groups: usize, years: i32) -> Vec<(i32, f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("valid");
    let mut rows = Vec::new();
    for g in 0..groups {
        let a = 5.0 + 3.0 * noise.sample(&mut rng);
        let b = 1.0 + 0.8 * noise.sample(&mut rng);
        for t in 0..years {
            rows.push((2000 + t, a + b * t as f64 + noise.sample(&mut rng), format!("g{g}")));
        }
    }
    rows
}

/// Marginal log-likelihood of `rows` under fixed effects `beta`, random
/// effect covariance `d` and residual variance `s2`, by dense Cholesky per
/// group.
fn marginal_loglik(rows: &[(i32, f64, String)], origin: i32, beta: [f64; 2], d: [[f64; 2]; 2], s2: f64) -> f64 {
    let mut groups: std::collections::BTreeMap<&str, Vec<(f64, f64)>> = Default::default();
    for (y, v, g) in rows {
        groups.entry(g).or_default().push(((y - origin) as f64, *v));
    }
    let mut ll = 0.0;
    for obs in groups.values() {
        let n = obs.len();
        let mut v = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let (xi, xj) = (obs[i].0, obs[j].0);
                v[i][j] = d[0][0] + d[0][1] * (xi + xj) + d[1][1] * xi * xj + if i == j { s2 } else { 0.0 };
            }
        }
        let mut l = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = v[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                l[i][j] = if i == j { s.sqrt() } else { s / l[j][j] };
            }
        }
        let r: Vec<f64> = obs.iter().map(|(x, y)| y - beta[0] - beta[1] * x).collect();
        let mut z = vec![0.0; n];
        for i in 0..n {
            z[i] = (r[i] - (0..i).map(|k| l[i][k] * z[k]).sum::<f64>()) / l[i][i];
        }
        let logdet: f64 = 2.0 * (0..n).map(|i| l[i][i].ln()).sum::<f64>();
        ll -= 0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + z.iter().map(|x| x * x).sum::<f64>());
    }
    ll
}

fn params(fit: &MixedModelFit) -> ([f64; 2], [[f64; 2]; 2], f64) {
    let (s2, d00, d11) = fit.var_components;
    let c = fit.intercept_slope_cov;
    ([fit.fixed_intercept, fit.fixed_slope], [[d00, c], [c, d11]], s2)
}

fn heterogeneous_rows(seed: u64) -> Vec<ObsRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.5).expect("valid");
    let slopes = [0.2, 0.6, 1.5, 3.0, 5.0, -0.5];
    let mut rows = Vec::new();
    for (i, &s) in slopes.iter().enumerate() {
        for t in 0..11 {
            rows.push(ObsRow {
                direction: format!("r{i}"),
                discipline: format!("D{}", i / 2),
                year: 2010 + t,
                count: (2.0 + s * t as f64 + noise.sample(&mut rng)).max(0.0),
            });
        }
    }
    rows
}

pub fn check() -> Check {
    let fit = fit_linear(&[(0, 0.0), (1, 1.0), (2, 1.0)], None).map_err(|e| e.to_string())?;
    ensure!((fit.slope - 0.5).abs() < 1e-12, "slope {}", fit.slope);
    ensure!((fit.predict(0) - 1.0 / 6.0).abs() < 1e-12, "intercept {}", fit.predict(0));
    ensure!((fit.r2 - 0.75).abs() < 1e-12, "r2 {}", fit.r2);

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..100 {
        let n = rng.gen_range(3..40);
        let pts: Vec<(i32, f64)> = (0..n).map(|_| (rng.gen_range(1990..2030), rng.gen_range(-50.0..50.0))).collect();
        let Ok(f) = fit_linear(&pts, None) else { continue };
        let resid: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x as f64, y - f.predict(x))).collect();
        let scale = pts.iter().map(|p| p.1.abs()).sum::<f64>().max(1.0);
        let s0: f64 = resid.iter().map(|r| r.1).sum();
        let s1: f64 = resid.iter().map(|r| r.1 * (r.0 - f.year_origin as f64)).sum();
        ensure!(s0.abs() < 1e-9 * scale && s1.abs() < 1e-9 * scale * 40.0, "case {case}: residual sums {s0:e}, {s1:e}");
    }

    for seed in 0..20 {
        let rows = mixed_fixture(seed, 3 + seed as usize % 5, 6 + seed as i32 % 6);
        let fit = fit_mixed(&rows, MixedOptions::default()).map_err(|e| format!("fixture {seed}: {e}"))?;
        for w in fit.loglik_trace.windows(2) {
            ensure!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "fixture {seed}: loglik fell {} -> {}", w[0], w[1]);
        }
    }

    let rows = mixed_fixture(99, 10, 12);
    let fit = fit_mixed(&rows, MixedOptions::default()).map_err(|e| e.to_string())?;
    ensure!(fit.converged, "ML oracle fixture did not converge");
    let (beta, d, s2) = params(&fit);
    let at_fit = marginal_loglik(&rows, fit.year_origin, beta, d, s2);
    ensure!((at_fit - fit.loglik).abs() < 1e-6 * at_fit.abs(), "loglik {} vs dense {at_fit}", fit.loglik);
    for step in [1e-2, 1e-3] {
        for which in 0..6 {
            for sign in [-1.0, 1.0] {
                let (mut b, mut dd, mut s) = (beta, d, s2);
                match which {
                    0 => b[0] += sign * step * b[0].abs().max(1.0),
                    1 => b[1] += sign * step * b[1].abs().max(1.0),
                    2 => s *= 1.0 + sign * step,
                    3 => dd[0][0] *= 1.0 + sign * step,
                    4 => dd[1][1] *= 1.0 + sign * step,
                    _ => {
                        let c = dd[0][1] + sign * step * (dd[0][0] * dd[1][1]).sqrt();
                        dd[0][1] = c;
                        dd[1][0] = c;
                    }
                }
                let ll = marginal_loglik(&rows, fit.year_origin, b, dd, s);
                ensure!(ll <= at_fit + 1e-7 * at_fit.abs(), "perturbing parameter {which} by {sign}{step} raises loglik");
            }
        }
    }

    let rows = heterogeneous_rows(7);
    let lr1 = cross_validate(&rows, ModelKind::LR1, 10, 100, 7).map_err(|e| e.to_string())?;
    let lr2 = cross_validate(&rows, ModelKind::LR2, 10, 100, 7).map_err(|e| e.to_string())?;
    ensure!(lr2.test.r2 > lr1.test.r2, "held-out r2 LR2 {} <= LR1 {}", lr2.test.r2, lr1.test.r2);
    Ok(format!(
        "normal equations exact, EM monotone on 20 fixtures, EM at a local ML optimum, held-out r2 LR1 {:.2} -> LR2 {:.2}",
        lr1.test.r2, lr2.test.r2
    ))
}
