use super::{ForecastError, ObsRow};
use crate::diffusion::DiffusionSeries;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Least-squares line `count = intercept + slope * (year - year_origin)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    /// Value at `year_origin`, the earliest year in the fitted data.
    pub intercept: f64,
    pub year_origin: i32,
    pub r2: f64,
    /// Set when the counts have zero variance; `r2` is then reported as 0.
    pub r2_flagged: bool,
    pub n: usize,
    pub group: Option<String>,
}

impl RegressionFit {
    pub fn predict(&self, year: i32) -> f64 {
        self.intercept + self.slope * f64::from(year - self.year_origin)
    }
}

pub fn fit_linear(points: &[(i32, f64)], group: Option<&str>) -> Result<RegressionFit, ForecastError> {
    if points.len() < 2 {
        return Err(ForecastError::TooFewPoints(points.len()));
    }
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(ForecastError::NonFinite);
    }
    let origin = points.iter().map(|p| p.0).min().expect("non-empty");
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| f64::from(p.0 - origin)).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ForecastError::DegenerateDesign);
    }
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - x_mean) * (p.1 - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sst: f64 = points.iter().map(|p| (p.1 - y_mean).powi(2)).sum();
    let sse: f64 = xs
        .iter()
        .zip(points)
        .map(|(x, p)| (p.1 - intercept - slope * x).powi(2))
        .sum();
    let (r2, r2_flagged) = if sst == 0.0 {
        (0.0, true)
    } else {
        ((1.0 - sse / sst).clamp(0.0, 1.0), false)
    };
    Ok(RegressionFit {
        slope,
        intercept,
        year_origin: origin,
        r2,
        r2_flagged,
        n: points.len(),
        group: group.map(str::to_string),
    })
}

/// `(year, rate)` rows for every year a series covers, zero years included.
pub fn rows_from_series(series: &DiffusionSeries) -> Vec<(i32, f64)> {
    series.counts.iter().map(|(&y, &c)| (y, c as f64)).collect()
}

/// Pooled fit over all series.
pub fn fit_lr1(series: &[DiffusionSeries]) -> Result<RegressionFit, ForecastError> {
    let pooled: Vec<(i32, f64)> = series.iter().flat_map(rows_from_series).collect();
    fit_linear(&pooled, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lr2Fits {
    pub fits: Vec<RegressionFit>,
    pub failures: Vec<(String, ForecastError)>,
}

/// One fit per series; failing series are collected rather than aborting.
pub fn fit_lr2(series: &[DiffusionSeries]) -> Lr2Fits {
    let mut out = Lr2Fits {
        fits: vec![],
        failures: vec![],
    };
    for s in series {
        match fit_linear(&rows_from_series(s), Some(&s.direction)) {
            Ok(f) => out.fits.push(f),
            Err(e) => out.failures.push((s.direction.clone(), e)),
        }
    }
    out
}

/// Per-direction fits over observation rows, keyed by direction.
pub(crate) fn fit_lr2_rows(rows: &[&ObsRow]) -> Result<BTreeMap<String, RegressionFit>, ForecastError> {
    let mut groups: BTreeMap<&str, Vec<(i32, f64)>> = BTreeMap::new();
    for r in rows {
        groups.entry(&r.direction).or_default().push((r.year, r.count));
    }
    groups
        .into_iter()
        .map(|(d, pts)| fit_linear(&pts, Some(d)).map(|f| (d.to_string(), f)))
        .collect()
}
