//! Random intercept and slope model, one grouping factor:
//!
//! ```text
//! y_ij = (b0 + u0_i) + (b1 + u1_i) x_ij + e_ij,   u_i ~ N(0, D),  e ~ N(0, s2)
//! ```
//!
//! with `x` the year minus the earliest year. Maximum likelihood by EM,
//! treating the `u_i` as missing data. Every group quantity is reduced to
//! the sufficient statistics `ZᵀZ`, `Zᵀy` and `yᵀy`, so one iteration is
//! `O(groups)` 2x2 algebra.

use super::{ForecastError, ObsRow};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

type M2 = [[f64; 2]; 2];
type V2 = [f64; 2];

fn mat_mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mat_vec(a: &M2, v: &V2) -> V2 {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

fn dot(a: &V2, b: &V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn det(a: &M2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

fn inv(a: &M2) -> M2 {
    let d = det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

fn scale(a: &M2, s: f64) -> M2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

fn add(a: &M2, b: &M2) -> M2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

const I2: M2 = [[1.0, 0.0], [0.0, 1.0]];

#[derive(Debug, Clone)]
struct Group {
    label: String,
    n: f64,
    ztz: M2,
    zty: V2,
    yty: f64,
}

impl Group {
    /// `Zᵀr` and `rᵀr` for residuals `r = y - Zβ`.
    fn residual_stats(&self, beta: &V2) -> (V2, f64) {
        let ztz_b = mat_vec(&self.ztz, beta);
        let ztr = [self.zty[0] - ztz_b[0], self.zty[1] - ztz_b[1]];
        let rtr = self.yty - 2.0 * dot(beta, &self.zty) + dot(beta, &ztz_b);
        (ztr, rtr.max(0.0))
    }
}

#[derive(Debug, Clone, Copy)]
struct Params {
    beta: V2,
    d: M2,
    s2: f64,
}

struct Posterior {
    mean: V2,
    cov: M2,
}

/// Posterior of `u_i` and the group's marginal log-likelihood term.
fn e_step(g: &Group, p: &Params) -> (Posterior, f64) {
    let a = scale(&g.ztz, 1.0 / p.s2);
    let i_da = add(&I2, &mat_mul(&p.d, &a));
    // C = (D⁻¹ + A)⁻¹ = (I + DA)⁻¹ D, valid for singular D
    let cov = mat_mul(&inv(&i_da), &p.d);
    let cov = [[cov[0][0], 0.5 * (cov[0][1] + cov[1][0])], [0.5 * (cov[0][1] + cov[1][0]), cov[1][1]]];
    let (ztr, rtr) = g.residual_stats(&p.beta);
    let cz = mat_vec(&cov, &ztr);
    let mean = [cz[0] / p.s2, cz[1] / p.s2];
    // log|V| by the determinant lemma, rᵀV⁻¹r by Woodbury
    let log_det = g.n * p.s2.ln() + det(&i_da).ln();
    let quad = rtr / p.s2 - dot(&ztr, &cz) / (p.s2 * p.s2);
    let ll = -0.5 * (g.n * (2.0 * std::f64::consts::PI).ln() + log_det + quad);
    (Posterior { mean, cov }, ll)
}

fn log_likelihood(groups: &[Group], p: &Params) -> f64 {
    groups.iter().map(|g| e_step(g, p).1).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedOptions {
    /// Stop once `|Δℓ| / max(|ℓ|, 1)` drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MixedOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedModelFit {
    pub fixed_intercept: f64,
    pub fixed_slope: f64,
    pub year_origin: i32,
    /// Predicted random effects `(intercept deviation, slope deviation)`.
    pub group_effects: BTreeMap<String, (f64, f64)>,
    /// `(σ²_residual, σ²_intercept, σ²_slope)`.
    pub var_components: (f64, f64, f64),
    pub intercept_slope_cov: f64,
    pub loglik: f64,
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    /// False when the iteration cap was reached first.
    pub converged: bool,
}

impl MixedModelFit {
    /// Group-specific prediction; unknown groups get the fixed line.
    pub fn predict(&self, year: i32, group: &str) -> f64 {
        let x = f64::from(year - self.year_origin);
        let (u0, u1) = self.group_effects.get(group).copied().unwrap_or((0.0, 0.0));
        self.fixed_intercept + u0 + (self.fixed_slope + u1) * x
    }
}

/// Fits `count ~ year + (year | discipline)`.
pub fn fit_mixed(rows: &[(i32, f64, String)], options: MixedOptions) -> Result<MixedModelFit, ForecastError> {
    if rows.iter().any(|r| !r.1.is_finite()) {
        return Err(ForecastError::NonFinite);
    }
    let origin = rows.iter().map(|r| r.0).min().ok_or(ForecastError::SingleGroup(0))?;
    let mut by_group: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for (year, y, g) in rows {
        by_group.entry(g).or_default().push((f64::from(year - origin), *y));
    }
    if by_group.len() < 2 {
        return Err(ForecastError::SingleGroup(by_group.len()));
    }
    let mut groups = Vec::with_capacity(by_group.len());
    for (label, pts) in &by_group {
        if pts.iter().all(|p| p.0 == pts[0].0) {
            return Err(ForecastError::GroupTooSmall(label.to_string()));
        }
        let (mut sx, mut sxx, mut sy, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x, y) in pts {
            sx += x;
            sxx += x * x;
            sy += y;
            sxy += x * y;
            syy += y * y;
        }
        let n = pts.len() as f64;
        groups.push(Group {
            label: label.to_string(),
            n,
            ztz: [[n, sx], [sx, sxx]],
            zty: [sy, sxy],
            yty: syy,
        });
    }
    let n_total: f64 = groups.iter().map(|g| g.n).sum();
    let total_ztz = groups.iter().fold([[0.0; 2]; 2], |acc, g| add(&acc, &g.ztz));
    let inv_total = inv(&total_ztz);
    let s2_floor = 1e-12 * (groups.iter().map(|g| g.yty).sum::<f64>() / n_total + 1.0);

    // start: pooled OLS, spread of per-group OLS lines, plus a positive ridge
    let total_zty = groups.iter().fold([0.0; 2], |acc, g| [acc[0] + g.zty[0], acc[1] + g.zty[1]]);
    let beta = mat_vec(&inv_total, &total_zty);
    let s2 = (groups.iter().map(|g| g.residual_stats(&beta).1).sum::<f64>() / n_total).max(s2_floor);
    let coefs: Vec<V2> = groups.iter().map(|g| mat_vec(&inv(&g.ztz), &g.zty)).collect();
    let m = groups.len() as f64;
    let mut d = [[0.0; 2]; 2];
    for c in &coefs {
        let dv = [c[0] - beta[0], c[1] - beta[1]];
        d = add(&d, &[[dv[0] * dv[0], dv[0] * dv[1]], [dv[1] * dv[0], dv[1] * dv[1]]]);
    }
    d = scale(&d, 1.0 / m);
    let x_var = total_ztz[1][1] / n_total - (total_ztz[0][1] / n_total).powi(2);
    let y_var = s2.max(1e-6);
    d = add(&d, &[[1e-3 * y_var, 0.0], [0.0, 1e-3 * y_var / x_var.max(1.0)]]);

    let mut p = Params { beta, d, s2 };
    let mut ll = log_likelihood(&groups, &p);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let posts: Vec<Posterior> = groups.iter().map(|g| e_step(g, &p).0).collect();

        let mut rhs = [0.0; 2];
        for (g, post) in groups.iter().zip(&posts) {
            let zzm = mat_vec(&g.ztz, &post.mean);
            rhs[0] += g.zty[0] - zzm[0];
            rhs[1] += g.zty[1] - zzm[1];
        }
        let beta = mat_vec(&inv_total, &rhs);

        let mut d_new = [[0.0; 2]; 2];
        let mut sse = 0.0;
        for (g, post) in groups.iter().zip(&posts) {
            let u = post.mean;
            d_new = add(&d_new, &add(&[[u[0] * u[0], u[0] * u[1]], [u[1] * u[0], u[1] * u[1]]], &post.cov));
            let (ztr, rtr) = g.residual_stats(&beta);
            let zzu = mat_vec(&g.ztz, &u);
            let trace_term = (0..2).map(|i| (0..2).map(|j| g.ztz[i][j] * post.cov[j][i]).sum::<f64>()).sum::<f64>();
            sse += rtr - 2.0 * dot(&u, &ztr) + dot(&u, &zzu) + trace_term;
        }
        p = Params {
            beta,
            d: scale(&d_new, 1.0 / m),
            s2: (sse / n_total).max(s2_floor),
        };
        let ll_new = log_likelihood(&groups, &p);
        trace.push(ll_new);
        let rel = (ll_new - ll).abs() / ll.abs().max(1.0);
        ll = ll_new;
        if rel < options.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("mixed model stopped at the {} iteration cap", options.max_iterations);
    }

    let group_effects = groups
        .iter()
        .map(|g| {
            let u = e_step(g, &p).0.mean;
            (g.label.clone(), (u[0], u[1]))
        })
        .collect();
    Ok(MixedModelFit {
        fixed_intercept: p.beta[0],
        fixed_slope: p.beta[1],
        year_origin: origin,
        group_effects,
        var_components: (p.s2, p.d[0][0], p.d[1][1]),
        intercept_slope_cov: p.d[0][1],
        loglik: ll,
        loglik_trace: trace,
        iterations,
        converged,
    })
}

pub(crate) fn fit_mixed_rows(rows: &[&ObsRow]) -> Result<MixedModelFit, ForecastError> {
    let triples: Vec<(i32, f64, String)> = rows.iter().map(|r| (r.year, r.count, r.discipline.clone())).collect();
    fit_mixed(&triples, MixedOptions::default())
}
