use crate::{ensure, Check};
use difftree::corpus::{deduplicate, is_duplicate, normalize_doi, normalize_title, CitationRecord, Corpus};
use difftree::synth::records_with_duplicates;

/// Pairwise scan: a record is dropped when it matches any earlier kept one.
fn brute_force(records: &[CitationRecord]) -> Vec<&CitationRecord> {
    let mut kept: Vec<&CitationRecord> = Vec::new();
    for r in records {
        let matches = |k: &&CitationRecord| {
            let same_doi = match (&r.doi, &k.doi) {
                (Some(a), Some(b)) => normalize_doi(a) == normalize_doi(b),
                _ => false,
            };
            same_doi || (r.year == k.year && normalize_title(&r.title) == normalize_title(&k.title))
        };
        if !kept.iter().any(matches) {
            kept.push(r);
        }
    }
    kept
}

pub fn check() -> Check {
    let mut removed_total = 0;
    for seed in 0..3 {
        let records = records_with_duplicates(1_000 - 150, 150, seed);
        ensure!(records.len() == 1_000, "generator produced {} records", records.len());
        let (out, report) = deduplicate(&Corpus::new("oracle", records.clone()));
        let oracle = brute_force(&records);
        ensure!(
            out.records.iter().eq(oracle.iter().copied()),
            "seed {seed}: {} kept, oracle keeps {}",
            out.len(),
            oracle.len()
        );
        ensure!(report.kept + report.removed == 1_000, "seed {seed}: report does not add up");
        for (i, a) in out.records.iter().enumerate() {
            for b in &out.records[i + 1..] {
                ensure!(!is_duplicate(a, b), "seed {seed}: {} and {} both kept", a.record_id, b.record_id);
            }
        }
        ensure!(report.removed >= 150, "seed {seed}: only {} removed", report.removed);
        removed_total += report.removed;
    }
    Ok(format!("3 x 1000 records match the pairwise oracle ({removed_total} removed)"))
}
