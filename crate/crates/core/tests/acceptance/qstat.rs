use crate::{ensure, Check};
use difftree::qstat::{q_permutation_test, q_statistic, StratifiedSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(values: &[f64], strata: &[&str]) -> Result<f64, String> {
    let s = StratifiedSample::new(values.to_vec(), strata).map_err(|e| e.to_string())?;
    q_statistic(&s).map(|r| r.q).map_err(|e| e.to_string())
}

fn permutations(items: &mut Vec<f64>, k: usize, out: &mut Vec<Vec<f64>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Share of all N! relabelings whose q reaches the observed q.
fn exhaustive_p(values: &[f64], strata: &[&str]) -> Result<f64, String> {
    let observed = q(values, strata)?;
    let mut all = Vec::new();
    permutations(&mut values.to_vec(), 0, &mut all);
    let mut hits = 0usize;
    for p in &all {
        if q(p, strata)? >= observed - 1e-12 {
            hits += 1;
        }
    }
    Ok(hits as f64 / all.len() as f64)
}

pub fn check() -> Check {
    let nine_fourteenths = q(&[1.0, 2.0, 3.0, 6.0], &["A", "A", "B", "B"])?;
    ensure!((nine_fourteenths - 9.0 / 14.0).abs() < 1e-12, "q = {nine_fourteenths}");
    let zero = q(&[1.0, 2.0, 1.0, 2.0], &["A", "A", "B", "B"])?;
    ensure!(zero.abs() < 1e-12, "equal stratum means gave q = {zero}");
    let one = q(&[3.0, 3.0, 8.0, 8.0, 8.0], &["A", "A", "B", "B", "B"])?;
    ensure!((one - 1.0).abs() < 1e-12, "constant strata gave q = {one}");

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let labels = ["A", "B", "C"];
    for draw in 0..100 {
        let n = rng.gen_range(4..30);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
        let mut strata: Vec<&str> = (0..n).map(|i| labels[i % 3]).collect();
        strata.truncate(n);
        let (a, b) = (rng.gen_range(0.1..10.0) * if rng.gen() { 1.0 } else { -1.0 }, rng.gen_range(-1e3..1e3));
        let base = q(&values, &strata)?;
        let moved = q(&values.iter().map(|v| a * v + b).collect::<Vec<_>>(), &strata)?;
        ensure!((base - moved).abs() < 1e-9, "draw {draw}: q {base} vs {moved} after a = {a}, b = {b}");
    }

    let mut notes = Vec::new();
    let cases: [(&[f64], &[&str]); 2] = [
        (&[1.0, 2.5, 3.0, 7.0, 8.5, 4.0], &["A", "A", "A", "B", "B", "B"]),
        (&[2.0, 9.0, 4.0, 4.5, 7.0, 1.0, 8.0, 3.0], &["A", "A", "B", "B", "C", "C", "C", "A"]),
    ];
    for (values, strata) in cases {
        let exact = exhaustive_p(values, strata)?;
        let n_perm = 9_999;
        let sample = StratifiedSample::new(values.to_vec(), strata).map_err(|e| e.to_string())?;
        let mc = q_permutation_test(&sample, n_perm, 31).map_err(|e| e.to_string())?;
        let p = mc.p_value.ok_or("no p-value")?;
        let se = (exact * (1.0 - exact) / n_perm as f64).sqrt();
        ensure!((p - exact).abs() <= 3.0 * se, "N = {}: Monte-Carlo p {p} vs exact {exact} (se {se:.4})", values.len());
        notes.push(format!("N={} p {p:.4} vs exact {exact:.4}", values.len()));
    }
    Ok(format!("9/14 exact, trivial cases, affine invariance x100, {}", notes.join(", ")))
}
