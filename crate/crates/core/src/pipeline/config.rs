//! Run configuration.
//!
//! ```toml
//! seed = 42
//! output_dir = "out"
//!
//! [inputs]
//! corpus = "corpus.txt"            # WoS plain text, .jsonl or .csv
//! taxonomy = "taxonomy.toml"
//! label_map = "label_map.toml"
//! economy_profiles = "economy_profiles.csv"
//! # stopwords and gazetteer default to the bundled lists
//!
//! [parse]
//! year_min = 2010
//! year_max = 2020
//!
//! [topics]
//! passes = [[3, 6, 9, 12]]
//! tolerance = 0.03
//!
//! [forecast]
//! folds = 10
//! repeats = 100
//! horizon_year = 2030
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use crate::diffusion::DEFAULT_STAGE_THRESHOLD;
use crate::par::Execution;
use crate::topics::LdaSettings;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

/// A validation failure tied to a config key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    parallel: Option<bool>,
    inputs: Option<RawInputs>,
    #[serde(default)]
    parse: RawParse,
    #[serde(default)]
    topics: RawTopics,
    #[serde(default)]
    stages: RawStages,
    #[serde(default)]
    forecast: RawForecast,
    #[serde(default)]
    qstat: RawQstat,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInputs {
    corpus: Option<PathBuf>,
    stopwords: Option<PathBuf>,
    gazetteer: Option<PathBuf>,
    label_map: Option<PathBuf>,
    taxonomy: Option<PathBuf>,
    economy_profiles: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParse {
    year_min: Option<i32>,
    year_max: Option<i32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopics {
    passes: Option<Vec<Vec<usize>>>,
    tolerance: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    iterations: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStages {
    threshold: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForecast {
    folds: Option<usize>,
    repeats: Option<usize>,
    horizon_year: Option<i32>,
    min_years: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQstat {
    permutations: Option<usize>,
    log1p: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inputs {
    pub corpus: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub label_map: PathBuf,
    pub taxonomy: PathBuf,
    pub economy_profiles: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParseParams {
    pub year_min: Option<i32>,
    pub year_max: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicParams {
    /// Candidate topic counts per pass; the last pass fixes the model's K.
    pub passes: Vec<Vec<usize>>,
    pub tolerance: f64,
    pub lda: LdaSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageParams {
    pub threshold: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastParams {
    pub folds: usize,
    pub repeats: usize,
    pub horizon_year: i32,
    /// Directions observed in fewer years are left out of the models.
    pub min_years: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QstatParams {
    pub permutations: usize,
    pub log1p: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub inputs: Inputs,
    pub parse: ParseParams,
    pub topics: TopicParams,
    pub stages: StageParams,
    pub forecast: ForecastParams,
    pub qstat: QstatParams,
    #[serde(skip)]
    pub execution: Execution,
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self, Vec<FieldError>> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            vec![FieldError {
                field: "config".into(),
                message: format!("{}: {e}", path.display()),
            }]
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, &base)
    }

    /// Parses and validates; every problem found is reported, not just the
    /// first.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, Vec<FieldError>> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            vec![FieldError {
                field: "config".into(),
                message: e.to_string().trim().to_string(),
            }]
        })?;
        let mut errors = Vec::new();
        let mut fail = |field: &str, message: String| {
            errors.push(FieldError {
                field: field.into(),
                message,
            })
        };
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };

        let seed = raw.seed.unwrap_or_else(|| {
            fail("seed", "required".into());
            0
        });
        let output_dir = match raw.output_dir {
            Some(p) => resolve(&p),
            None => {
                fail("output_dir", "required".into());
                PathBuf::new()
            }
        };

        let raw_inputs = raw.inputs.unwrap_or(RawInputs {
            corpus: None,
            stopwords: None,
            gazetteer: None,
            label_map: None,
            taxonomy: None,
            economy_profiles: None,
        });
        let mut required = |field: &str, p: Option<PathBuf>| match p {
            Some(p) => {
                let p = resolve(&p);
                if !p.is_file() {
                    fail(field, format!("file not found: {}", p.display()));
                }
                p
            }
            None => {
                fail(field, "required".into());
                PathBuf::new()
            }
        };
        let corpus = required("inputs.corpus", raw_inputs.corpus);
        let label_map = required("inputs.label_map", raw_inputs.label_map);
        let taxonomy = required("inputs.taxonomy", raw_inputs.taxonomy);
        let economy_profiles = required("inputs.economy_profiles", raw_inputs.economy_profiles);
        let mut optional = |field: &str, p: Option<PathBuf>| {
            p.map(|p| {
                let p = resolve(&p);
                if !p.is_file() {
                    fail(field, format!("file not found: {}", p.display()));
                }
                p
            })
        };
        let stopwords = optional("inputs.stopwords", raw_inputs.stopwords);
        let gazetteer = optional("inputs.gazetteer", raw_inputs.gazetteer);

        if let (Some(a), Some(b)) = (raw.parse.year_min, raw.parse.year_max) {
            if a > b {
                fail("parse.year_min", format!("{a} is after parse.year_max {b}"));
            }
        }

        let passes = raw.topics.passes.unwrap_or_else(|| vec![vec![5, 10, 15, 20]]);
        if passes.is_empty() {
            fail("topics.passes", "at least one pass is required".into());
        }
        for (i, pass) in passes.iter().enumerate() {
            if pass.is_empty() || pass.contains(&0) {
                fail("topics.passes", format!("pass {i}: topic counts must be positive"));
            } else if pass.windows(2).any(|w| w[0] >= w[1]) {
                fail("topics.passes", format!("pass {i}: candidates must be strictly ascending"));
            }
        }
        let tolerance = raw.topics.tolerance.unwrap_or(0.02);
        if !(0.0..1.0).contains(&tolerance) {
            fail("topics.tolerance", format!("{tolerance} is not in [0, 1)"));
        }
        let defaults = LdaSettings::default();
        let lda = LdaSettings {
            alpha: raw.topics.alpha,
            beta: raw.topics.beta.unwrap_or(defaults.beta),
            iterations: raw.topics.iterations.unwrap_or(defaults.iterations),
        };
        if lda.alpha.is_some_and(|a| a.is_nan() || a <= 0.0) {
            fail("topics.alpha", "must be positive".into());
        }
        if lda.beta.is_nan() || lda.beta <= 0.0 {
            fail("topics.beta", "must be positive".into());
        }
        if lda.iterations == 0 {
            fail("topics.iterations", "must be positive".into());
        }

        let threshold = raw.stages.threshold.unwrap_or(DEFAULT_STAGE_THRESHOLD);
        if threshold < 0 {
            fail("stages.threshold", "must be non-negative".into());
        }

        let forecast = ForecastParams {
            folds: raw.forecast.folds.unwrap_or(10),
            repeats: raw.forecast.repeats.unwrap_or(100),
            horizon_year: raw.forecast.horizon_year.unwrap_or(2030),
            min_years: raw.forecast.min_years.unwrap_or(3),
        };
        if forecast.folds < 2 {
            fail("forecast.folds", "must be at least 2".into());
        }
        if forecast.repeats == 0 {
            fail("forecast.repeats", "must be positive".into());
        }
        if forecast.min_years < 2 {
            fail("forecast.min_years", "must be at least 2".into());
        }

        let qstat = QstatParams {
            permutations: raw.qstat.permutations.unwrap_or(999),
            log1p: raw.qstat.log1p.unwrap_or(false),
        };
        if qstat.permutations < 99 {
            fail("qstat.permutations", "must be at least 99".into());
        }

        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(PipelineConfig {
            seed,
            output_dir,
            inputs: Inputs {
                corpus,
                stopwords,
                gazetteer,
                label_map,
                taxonomy,
                economy_profiles,
            },
            parse: ParseParams {
                year_min: raw.parse.year_min,
                year_max: raw.parse.year_max,
            },
            topics: TopicParams { passes, tolerance, lda },
            stages: StageParams { threshold },
            forecast,
            qstat,
            execution: match raw.parallel {
                Some(false) => Execution::Sequential,
                _ => Execution::default(),
            },
        })
    }
}
