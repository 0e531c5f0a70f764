use crate::stages::SR;
use crate::{ensure, Check};
use difftree::diffusion::{classify_stage_timeline, compute_diffusion_series, detect_decay_patterns};
use difftree::synth::random_labeled;
use difftree::tree::{
    build_discipline_direction_tree, build_factor_tree, build_knowledge_evolution_tree, parse_economy_profiles, to_dot,
    EvolutionTree, LabeledCitation, TieBreak,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn dot_counts(tree: &EvolutionTree) -> (usize, usize) {
    let dot = to_dot(tree);
    let nodes = dot.lines().filter(|l| l.trim_start().starts_with('n') && l.contains(" [label=")).count();
    let edges = dot.lines().filter(|l| l.contains(" -> ")).count();
    (nodes, edges)
}

const PROFILES: &str = "country,income_type,se_share
A,High,0.2
B,High,0.02
C,Upper-middle,0.05
D,Lower-middle,0.005
E,Low,0.001
F,Low,0.015
";

const SR_PERIODS: [(i32, i32); 5] = [(1991, 2000), (2001, 2005), (2006, 2010), (2011, 2015), (2016, 2020)];

fn sr_citations() -> Vec<LabeledCitation> {
    let mut rng = ChaCha8Rng::seed_from_u64(1905);
    let mut out = Vec::new();
    for (discipline, counts) in SR {
        for (&(lo, hi), &n) in SR_PERIODS.iter().zip(&counts) {
            for _ in 0..n {
                out.push(LabeledCitation {
                    doc_id: format!("sr{}", out.len()),
                    direction: format!("{discipline} / topic {}", rng.gen_range(1..=3)),
                    discipline: discipline.to_string(),
                    year: rng.gen_range(lo..=hi),
                });
            }
        }
    }
    // each discipline's first citation falls in the first period; moving it
    // to 1991 makes all emerge together so the declared order decides
    for (discipline, _) in SR {
        let c = out.iter_mut().find(|c| c.discipline == discipline).expect("non-empty");
        c.year = 1991;
    }
    out
}

pub fn check() -> Check {
    let profiles = parse_economy_profiles(PROFILES).map_err(|e| e.to_string())?;
    let countries = ["A", "B", "C", "D", "E", "F"];
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..400);
        let labeled = random_labeled(n, rng.gen_range(1..6), rng.gen_range(1..5), (2010, 2020), seed);
        let dd = build_discipline_direction_tree(&labeled, (2010, 2020), &TieBreak::Label).map_err(|e| e.to_string())?;
        let triples: Vec<(&str, &str, i32)> =
            labeled.iter().map(|c| (c.doc_id.as_str(), c.direction.as_str(), c.year)).collect();
        let series = compute_diffusion_series(&triples, (2010, 2020)).map_err(|e| e.to_string())?;
        let timeline = classify_stage_timeline(&series, 3).map_err(|e| e.to_string())?;
        let ke = build_knowledge_evolution_tree(&labeled, &timeline, &TieBreak::Label).map_err(|e| e.to_string())?;
        let mut by_country: BTreeMap<String, u64> = BTreeMap::new();
        for _ in 0..n {
            *by_country.entry(countries[rng.gen_range(0..countries.len())].to_string()).or_insert(0) += 1;
        }
        let factor = build_factor_tree(&by_country, &profiles).map_err(|e| e.to_string())?;
        for (name, tree) in [("discipline-direction", &dd), ("knowledge", &ke), ("factor", &factor)] {
            ensure!(tree.leaf_total() == n as u64, "seed {seed} {name}: leaves sum to {} of {n}", tree.leaf_total());
            let (nodes, edges) = dot_counts(tree);
            ensure!(edges + 1 == nodes, "seed {seed} {name}: {nodes} nodes, {edges} edges");
        }
    }

    let sr = sr_citations();
    let order = TieBreak::Rank(SR.iter().map(|(d, _)| d.to_string()).collect());
    let whole = build_discipline_direction_tree(&sr, (1991, 2020), &order).map_err(|e| e.to_string())?;
    let totals: Vec<u64> = whole.branch_totals().into_iter().map(|(_, t)| t).collect();
    ensure!(totals == [306, 312, 153, 182, 106, 204], "SR branch totals {totals:?}");
    let mut per_period: Vec<(&str, Vec<u64>)> = SR.iter().map(|(d, _)| (*d, vec![])).collect();
    for period in SR_PERIODS {
        let t = build_discipline_direction_tree(&sr, period, &order).map_err(|e| e.to_string())?;
        for (d, counts) in per_period.iter_mut() {
            counts.push(t.branch(d).map_or(0, |b| b.twigs.iter().flat_map(|tw| &tw.leaves).map(|l| l.size).sum()));
        }
    }
    for ((d, got), (_, want)) in per_period.iter().zip(SR) {
        ensure!(got[..] == want[..], "SR {d}: period counts {got:?}");
    }
    let flags = detect_decay_patterns(&per_period).map_err(|e| e.to_string())?;
    ensure!(flags.moth_decay_at.len() == 2, "SR trees: moth decay {:?}", flags.moth_decay_at);
    Ok("100 random corpora conserve citations with edges = nodes - 1; SR branches 306/312/153/182/106/204".into())
}
