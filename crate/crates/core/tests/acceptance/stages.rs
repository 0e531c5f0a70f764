use crate::{ensure, Check};
use difftree::diffusion::{classify_stage_timeline, detect_decay_patterns, DiffusionSeries, Stage};
use difftree::synth::demo_series;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Random schedule with known boundaries: rates in [0, 3] during the first
/// period, at least one new direction and some rate above 3 in every year of
/// the second, rates above 3 and no newcomers in the third.
fn engineered(seed: u64) -> (Vec<DiffusionSeries>, [usize; 3]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lens = [rng.gen_range(1..6), rng.gen_range(1..4), rng.gen_range(1..5)];
    let years = lens.iter().sum::<usize>();
    let mut counts: Vec<Vec<u64>> = Vec::new();
    let early = rng.gen_range(1..4);
    for _ in 0..early {
        let start = rng.gen_range(0..lens[0]);
        counts.push(vec![0; years]);
        let last = counts.len() - 1;
        counts[last][start] = rng.gen_range(1..=3);
        for v in &mut counts[last][start + 1..lens[0]] {
            *v = rng.gen_range(0..=3);
        }
    }
    for y in lens[0]..lens[0] + lens[1] {
        let newcomers = rng.gen_range(1..3);
        for _ in 0..newcomers {
            let mut c = vec![0u64; years];
            c[y] = rng.gen_range(1..=6);
            counts.push(c);
        }
        let busy = rng.gen_range(0..counts.len());
        counts[busy][y] = counts[busy][y].max(rng.gen_range(4..10));
    }
    for c in counts.iter_mut() {
        let start = c.iter().position(|&v| v > 0).unwrap_or(years);
        for (y, v) in c.iter_mut().enumerate().skip(lens[0] + 1) {
            if y > start && *v == 0 {
                *v = rng.gen_range(0..8);
            }
        }
    }
    for y in lens[0] + lens[1]..years {
        let busy = rng.gen_range(0..counts.len());
        counts[busy][y] = rng.gen_range(4..12);
    }
    let series = counts
        .iter()
        .enumerate()
        .map(|(i, c)| DiffusionSeries::new(format!("d{i}"), c.iter().enumerate().map(|(y, &v)| (2000 + y as i32, v)).collect()))
        .collect();
    (series, lens)
}

const LISA: [(&str, [u64; 5]); 5] = [
    ("Health Sciences", [12, 61, 140, 230, 300]),
    ("Social Sciences", [97, 210, 520, 490, 380]),
    ("Atmospheric Science & Meteorology", [0, 5, 32, 90, 150]),
    ("Mathematics & Statistics", [60, 150, 230, 287, 340]),
    ("Geosciences", [30, 82, 130, 180, 230]),
];

pub const SR: [(&str, [u64; 5]); 6] = [
    ("optics", [20, 40, 70, 96, 80]),
    ("theoretical physics", [25, 45, 72, 95, 75]),
    ("elementary particle physics", [10, 20, 30, 43, 50]),
    ("mathematical physics", [15, 25, 50, 32, 60]),
    ("astronomy and astrophysics", [8, 14, 30, 18, 36]),
    ("other physical sciences", [20, 30, 40, 52, 62]),
];

pub fn check() -> Check {
    let demo = classify_stage_timeline(&demo_series(), 3).map_err(|e| e.to_string())?;
    let expected: BTreeMap<Stage, i32> = [(Stage::Budding, 2010), (Stage::Growing, 2016), (Stage::Mature, 2018)].into();
    ensure!(demo.boundaries == expected, "demo boundaries {:?}", demo.boundaries);
    ensure!(demo.is_monotone(), "demo regresses in {:?}", demo.regressions);

    for seed in 0..50 {
        let (series, lens) = engineered(seed);
        let t = classify_stage_timeline(&series, 3).map_err(|e| e.to_string())?;
        let mut want = Vec::new();
        for (stage, n) in Stage::ALL.iter().zip(lens) {
            want.extend(std::iter::repeat_n(*stage, n));
        }
        let got: Vec<Stage> = t.stages.values().copied().collect();
        ensure!(got == want, "engineered seed {seed}: {got:?} != {want:?}");
    }

    let lisa = detect_decay_patterns(&LISA.map(|(l, c)| (l, c.to_vec()))).map_err(|e| e.to_string())?;
    let steps = vec![("Social Sciences".to_string(), 4), ("Social Sciences".to_string(), 5)];
    ensure!(lisa.senescence_at == steps, "LISA senescence {:?}", lisa.senescence_at);
    ensure!(lisa.moth_decay_at.is_empty(), "LISA moth decay {:?}", lisa.moth_decay_at);

    let sr = detect_decay_patterns(&SR.map(|(l, c)| (l, c.to_vec()))).map_err(|e| e.to_string())?;
    let sen: Vec<(&str, usize)> = sr.senescence_at.iter().map(|(l, p)| (l.as_str(), *p)).collect();
    ensure!(
        sen == [("optics", 5), ("theoretical physics", 5), ("mathematical physics", 4), ("astronomy and astrophysics", 4)],
        "SR senescence {sen:?}"
    );
    let moth: Vec<(&str, [usize; 3])> = sr.moth_decay_at.iter().map(|(l, p)| (l.as_str(), *p)).collect();
    ensure!(
        moth == [("mathematical physics", [3, 4, 5]), ("astronomy and astrophysics", [3, 4, 5])],
        "SR moth decay {moth:?}"
    );
    Ok("demo boundaries 2010/2016/2018, 50 engineered timelines exact, LISA step and SR sawtooth flagged".into())
}
