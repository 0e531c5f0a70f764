use crate::{ensure, Check};
use difftree::diffusion::DiffusionSeries;
use difftree::forecast::{fit_lr2, forecast_cumulative, ForecastTable};
use difftree::synth::demo_series;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn project(series: &[DiffusionSeries], horizon: i32) -> Result<ForecastTable, String> {
    let fits = fit_lr2(series);
    if let Some((d, e)) = fits.failures.first() {
        return Err(format!("{d}: {e}"));
    }
    let last: BTreeMap<String, (i32, f64)> = series
        .iter()
        .map(|s| (s.direction.clone(), (*s.counts.keys().next_back().expect("non-empty"), s.total() as f64)))
        .collect();
    forecast_cumulative(&fits.fits, &last, horizon).map_err(|e| e.to_string())
}

fn monotone(table: &ForecastTable, series: &[DiffusionSeries]) -> Result<(), String> {
    for s in series {
        let mut prev = s.total() as f64;
        for r in table.rows.iter().filter(|r| r.direction == s.direction) {
            ensure!(r.predicted_new >= 0.0, "{} {}: negative new citations", r.direction, r.year);
            ensure!(r.predicted_cumulative >= prev, "{} {}: cumulative fell", r.direction, r.year);
            prev = r.predicted_cumulative;
        }
    }
    Ok(())
}

pub fn check() -> Check {
    let demo = demo_series();
    let table = project(&demo, 2030)?;
    ensure!(table.rows.len() == demo.len() * 10, "{} rows", table.rows.len());
    monotone(&table, &demo)?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..200 {
        let series: Vec<DiffusionSeries> = (0..rng.gen_range(1..6))
            .map(|d| {
                let slope = rng.gen_range(-3.0..4.0);
                let counts = (0..rng.gen_range(3..12))
                    .map(|t| (2010 + t, (10.0 + slope * t as f64 + rng.gen_range(-2.0..2.0)).max(0.0).round() as u64))
                    .collect();
                DiffusionSeries::new(format!("d{d}"), counts)
            })
            .collect();
        let Ok(table) = project(&series, 2030) else { continue };
        monotone(&table, &series).map_err(|e| format!("case {case}: {e}"))?;
    }

    let falling = vec![DiffusionSeries::new("falling", (2016..=2020).zip([10, 8, 6, 4, 2]).collect())];
    let table = project(&falling, 2030)?;
    monotone(&table, &falling)?;
    let cumulative: Vec<f64> = table.rows.iter().map(|r| r.predicted_cumulative).collect();
    ensure!((cumulative[0] - 30.0).abs() < 1e-9, "2021 cumulative {}", cumulative[0]);
    ensure!(cumulative.iter().all(|&c| (c - 30.0).abs() < 1e-9), "clamped projection moved: {cumulative:?}");
    Ok(format!("{} demo directions non-decreasing to 2030; 200 random sets; negative slope clamps at 30", demo.len()))
}
