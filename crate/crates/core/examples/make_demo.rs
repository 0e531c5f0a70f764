//! Regenerates the demo fixture set.
//!
//! ```text
//! cargo run -p difftree --example make_demo [-- <dir>]
//! ```
//!
//! Writes the corpus, taxonomy, economy profiles and config, runs the topic
//! stage once in a scratch directory and labels each topic with the true
//! direction held by most of its documents.

use difftree::corpus::to_wos_plaintext;
use difftree::pipeline::{run_pipeline, PipelineConfig, StageName};
use difftree::synth::{demo_corpus, demo_taxonomy, DEMO_ECONOMY_PROFILES};
use difftree::topics::LabelMap;
use std::collections::BTreeMap;
use std::path::PathBuf;

const SEED: u64 = 2010;

const CONFIG: &str = r#"# Demo run over a synthetic corpus of 2010-2020 citations.
seed = 2010
output_dir = "out"

[inputs]
corpus = "corpus.txt"
taxonomy = "taxonomy.toml"
label_map = "label_map.toml"
economy_profiles = "economy_profiles.csv"

[parse]
year_min = 2010
year_max = 2020

[topics]
passes = [[3, 6, 9, 12]]
tolerance = 0.2

[forecast]
folds = 10
repeats = 100
horizon_year = 2030

[qstat]
permutations = 999
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo"));
    std::fs::create_dir_all(&dir)?;

    let (corpus, truth) = demo_corpus(SEED);
    std::fs::write(dir.join("corpus.txt"), to_wos_plaintext(&corpus))?;
    std::fs::write(dir.join("taxonomy.toml"), demo_taxonomy().to_toml())?;
    std::fs::write(dir.join("economy_profiles.csv"), DEMO_ECONOMY_PROFILES)?;
    std::fs::write(dir.join("config.toml"), CONFIG)?;
    std::fs::write(dir.join("label_map.toml"), "[topics]\n")?;

    let scratch = tempfile::tempdir()?;
    let mut cfg = PipelineConfig::from_file(&dir.join("config.toml")).map_err(|e| format!("{e:?}"))?;
    cfg.output_dir = scratch.path().to_path_buf();
    run_pipeline(&cfg, &[StageName::Topics])?;

    let doc_topics = std::fs::read_to_string(scratch.path().join("doc_topics.csv"))?;
    let mut votes: BTreeMap<usize, BTreeMap<&str, usize>> = BTreeMap::new();
    for line in doc_topics.lines().skip(1) {
        let mut f = line.split(',');
        let (id, topic) = (f.next().unwrap_or(""), f.next().unwrap_or("").parse::<usize>()?);
        if let Some(direction) = truth.get(id) {
            *votes.entry(topic).or_default().entry(direction).or_insert(0) += 1;
        }
    }
    let selection: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(scratch.path().join("topic_selection.json"))?)?;
    let k = selection["k"].as_u64().ok_or("topic_selection.json lacks k")? as usize;
    let mut map = LabelMap::default();
    for t in 0..k {
        let best = votes
            .get(&t)
            .and_then(|v| v.iter().max_by_key(|(d, n)| (**n, std::cmp::Reverse(**d))))
            .map(|(d, _)| d.to_string())
            .ok_or_else(|| format!("topic {t} holds no documents"))?;
        map.topic_to_label.insert(t, best);
    }
    std::fs::write(dir.join("label_map.toml"), map.to_toml())?;
    println!("K = {k}");
    for (t, d) in &map.topic_to_label {
        println!("topic {t} -> {d}");
    }
    Ok(())
}
