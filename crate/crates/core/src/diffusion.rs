//! Yearly diffusion rates, stage timelines and decay patterns.
//!
//! The diffusion rate of a research direction in a year is its count of new
//! citations in that year. Years are staged corpus-wide:
//!
//! * **Budding** when every direction's rate is at most the threshold;
//! * **Growing** when some rate exceeds the threshold and at least one
//!   direction receives its first citation that year;
//! * **Mature** when some rate exceeds the threshold and no direction
//!   emerges.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Default stage threshold on yearly new-citation counts.
pub const DEFAULT_STAGE_THRESHOLD: i64 = 3;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DiffusionError {
    #[error("invalid year range {0}..={1}")]
    InvalidRange(i32, i32),
    #[error("series {direction:?} covers {found:?}, expected {expected:?}")]
    MismatchedYearRanges {
        direction: String,
        expected: (i32, i32),
        found: (i32, i32),
    },
    #[error("branch {label:?} has {periods} periods; need at least 2")]
    TooFewPeriods { label: String, periods: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffusionSeries {
    pub direction: String,
    /// Every year of the range, zero-filled.
    pub counts: BTreeMap<i32, u64>,
    pub first_year: Option<i32>,
}

impl DiffusionSeries {
    pub fn new(direction: impl Into<String>, counts: BTreeMap<i32, u64>) -> Self {
        let first_year = counts.iter().find(|(_, &c)| c > 0).map(|(&y, _)| y);
        Self {
            direction: direction.into(),
            counts,
            first_year,
        }
    }

    pub fn rate(&self, year: i32) -> u64 {
        self.counts.get(&year).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    fn span(&self) -> Option<(i32, i32)> {
        Some((*self.counts.keys().next()?, *self.counts.keys().next_back()?))
    }
}

/// One series per direction (sorted by label). Rows outside `year_range`
/// are ignored; years without citations carry a zero.
pub fn compute_diffusion_series<S: AsRef<str>>(
    labeled: &[(S, S, i32)],
    year_range: (i32, i32),
) -> Result<Vec<DiffusionSeries>, DiffusionError> {
    let (lo, hi) = year_range;
    if lo > hi {
        return Err(DiffusionError::InvalidRange(lo, hi));
    }
    let mut tallies: BTreeMap<&str, BTreeMap<i32, u64>> = BTreeMap::new();
    for (_, direction, year) in labeled {
        let counts = tallies
            .entry(direction.as_ref())
            .or_insert_with(|| (lo..=hi).map(|y| (y, 0)).collect());
        if let Some(c) = counts.get_mut(year) {
            *c += 1;
        }
    }
    Ok(tallies
        .into_iter()
        .map(|(dir, counts)| DiffusionSeries::new(dir, counts))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    Budding,
    Growing,
    Mature,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Budding, Stage::Growing, Stage::Mature];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Budding => "Budding",
            Stage::Growing => "Growing",
            Stage::Mature => "Mature",
        })
    }
}

impl std::str::FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "budding" => Ok(Stage::Budding),
            "growing" => Ok(Stage::Growing),
            "mature" => Ok(Stage::Mature),
            _ => Err(format!("unknown stage {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTimeline {
    pub stages: BTreeMap<i32, Stage>,
    /// First year labelled with each stage.
    pub boundaries: BTreeMap<Stage, i32>,
    /// Years whose stage is earlier than a stage already reached.
    pub regressions: Vec<i32>,
}

impl StageTimeline {
    pub fn stage_of(&self, year: i32) -> Option<Stage> {
        self.stages.get(&year).copied()
    }

    /// Years labelled `stage`, ascending.
    pub fn years_of(&self, stage: Stage) -> Vec<i32> {
        self.stages.iter().filter(|(_, &s)| s == stage).map(|(&y, _)| y).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.regressions.is_empty()
    }
}

/// Labels every year of the shared range. A year that falls back to an
/// earlier stage is kept as labelled and reported in `regressions`.
pub fn classify_stage_timeline(
    all_series: &[DiffusionSeries],
    threshold: i64,
) -> Result<StageTimeline, DiffusionError> {
    let mut timeline = StageTimeline {
        stages: BTreeMap::new(),
        boundaries: BTreeMap::new(),
        regressions: vec![],
    };
    let Some(first) = all_series.first() else {
        return Ok(timeline);
    };
    let expected = first.span().unwrap_or((0, -1));
    if let Some(bad) = all_series.iter().find(|s| s.span().unwrap_or((0, -1)) != expected) {
        return Err(DiffusionError::MismatchedYearRanges {
            direction: bad.direction.clone(),
            expected,
            found: bad.span().unwrap_or((0, -1)),
        });
    }
    let emerging: BTreeSet<i32> = all_series.iter().filter_map(|s| s.first_year).collect();
    let mut reached = Stage::Budding;
    for year in expected.0..=expected.1 {
        let busy = all_series.iter().any(|s| s.rate(year) as i128 > threshold as i128);
        let stage = match (busy, emerging.contains(&year)) {
            (false, _) => Stage::Budding,
            (true, true) => Stage::Growing,
            (true, false) => Stage::Mature,
        };
        if stage < reached {
            log::warn!("year {year} labelled {stage} after {reached} was reached");
            timeline.regressions.push(year);
        }
        reached = reached.max(stage);
        timeline.boundaries.entry(stage).or_insert(year);
        timeline.stages.insert(year, stage);
    }
    Ok(timeline)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternFlags {
    /// `(branch, period)`: the period's count fell below the previous one.
    pub senescence_at: Vec<(String, usize)>,
    /// `(branch, [p-1, p, p+1])`: rise, fall at `p`, rise again.
    pub moth_decay_at: Vec<(String, [usize; 3])>,
}

/// Flags senescence and moth-decay periods. Periods are numbered from 1.
///
/// A moth-decay triple `(p-1, p, p+1)` needs a strict fall into `p` and a
/// strict rise out of it; when `p-1` has a predecessor, the count must also
/// have risen strictly into `p-1`. Plateaus never count as rises or falls.
pub fn detect_decay_patterns<S: AsRef<str>>(
    period_counts: &[(S, Vec<u64>)],
) -> Result<PatternFlags, DiffusionError> {
    let mut flags = PatternFlags::default();
    for (label, counts) in period_counts {
        let label = label.as_ref();
        if counts.len() < 2 {
            return Err(DiffusionError::TooFewPeriods {
                label: label.to_string(),
                periods: counts.len(),
            });
        }
        for i in 1..counts.len() {
            if counts[i] < counts[i - 1] {
                flags.senescence_at.push((label.to_string(), i + 1));
            }
        }
        for p in 1..counts.len().saturating_sub(1) {
            let fall = counts[p] < counts[p - 1];
            let rise_after = counts[p + 1] > counts[p];
            let rise_before = p < 2 || counts[p - 1] > counts[p - 2];
            if fall && rise_after && rise_before {
                flags.moth_decay_at.push((label.to_string(), [p, p + 1, p + 2]));
            }
        }
    }
    Ok(flags)
}
