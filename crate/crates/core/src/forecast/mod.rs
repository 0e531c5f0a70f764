//! Citation-growth models and cumulative forecasts.
//!
//! Three models of "annual new citations ~ year":
//!
//! * LR1, one ordinary least squares line over all rows pooled;
//! * LR2, one line per research direction;
//! * MLM, a linear mixed model with a random intercept and slope per
//!   discipline, fitted by maximum likelihood with EM.
//!
//! [`cross_validate`] scores them under repeated k-fold splits and
//! [`forecast_cumulative`] accumulates predicted yearly additions up to a
//! horizon year.

mod cv;
mod linear;
mod mixed;

pub use cv::{cross_validate, cross_validate_with, cv_partitions, reports_to_csv, CvMetrics, CvReport};
pub use linear::{fit_linear, fit_lr1, fit_lr2, rows_from_series, Lr2Fits, RegressionFit};
pub use mixed::{fit_mixed, MixedModelFit, MixedOptions};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ForecastError {
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("all points share one year; slope is undefined")]
    DegenerateDesign,
    #[error("mixed model needs at least 2 groups, got {0}")]
    SingleGroup(usize),
    #[error("group {0:?} needs at least 2 distinct years")]
    GroupTooSmall(String),
    #[error("insufficient rows for cross-validation: {0}")]
    InsufficientRows(String),
    #[error("no fit for direction {0:?}")]
    MissingFit(String),
    #[error("horizon {horizon} is not after the last observed year {last} of {direction:?}")]
    InvalidHorizon { direction: String, last: i32, horizon: i32 },
    #[error("non-finite value in input")]
    NonFinite,
}

/// One observation: new citations of a direction in a year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsRow {
    pub direction: String,
    pub discipline: String,
    pub year: i32,
    pub count: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    LR1,
    LR2,
    MLM,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::LR1, ModelKind::LR2, ModelKind::MLM];
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub direction: String,
    pub year: i32,
    pub predicted_new: f64,
    pub predicted_cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ForecastTable {
    pub rows: Vec<ForecastRow>,
}

impl ForecastTable {
    pub fn direction<'a>(&'a self, direction: &'a str) -> impl Iterator<Item = &'a ForecastRow> + 'a {
        self.rows.iter().filter(move |r| r.direction == direction)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["direction", "year", "predicted_new", "predicted_cumulative"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.direction.clone(),
                r.year.to_string(),
                r.predicted_new.to_string(),
                r.predicted_cumulative.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

/// Projects yearly additions `max(0, fit(y))` for every year after the last
/// observation up to `horizon_year`, accumulated onto the last cumulative
/// count. Output is ordered by direction, then year.
pub fn forecast_cumulative(
    fits: &[RegressionFit],
    last_observed: &BTreeMap<String, (i32, f64)>,
    horizon_year: i32,
) -> Result<ForecastTable, ForecastError> {
    let mut rows = Vec::new();
    for (direction, &(last_year, last_cumulative)) in last_observed {
        let fit = fits
            .iter()
            .find(|f| f.group.as_deref() == Some(direction.as_str()))
            .ok_or_else(|| ForecastError::MissingFit(direction.clone()))?;
        if horizon_year <= last_year {
            return Err(ForecastError::InvalidHorizon {
                direction: direction.clone(),
                last: last_year,
                horizon: horizon_year,
            });
        }
        let mut cumulative = last_cumulative;
        for year in last_year + 1..=horizon_year {
            let predicted_new = fit.predict(year).max(0.0);
            cumulative += predicted_new;
            rows.push(ForecastRow {
                direction: direction.clone(),
                year,
                predicted_new,
                predicted_cumulative: cumulative,
            });
        }
    }
    Ok(ForecastTable { rows })
}
