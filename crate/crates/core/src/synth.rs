//! Synthetic inputs with known ground truth, for tests, benches and the
//! bundled demo run.

use crate::corpus::{CitationRecord, Corpus};
use crate::diffusion::DiffusionSeries;
use crate::par::stream_rng;
use crate::topics::{Taxonomy, TokenDoc};
use crate::tree::LabeledCitation;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeMap;

/// Token documents drawn from `k` topics over disjoint vocabularies.
#[derive(Debug, Clone)]
pub struct SyntheticLda {
    pub docs: Vec<TokenDoc>,
    pub vocab_size: usize,
    /// Generating (dominant) topic of each document.
    pub truth: Vec<usize>,
}

/// Topic `t` owns word ids `t * words_per_topic .. (t + 1) * words_per_topic`.
/// Each document picks one topic; each token comes from it with probability
/// `purity`, otherwise from a uniformly drawn topic.
pub fn lda_corpus(k: usize, n_docs: usize, words_per_topic: usize, doc_len: usize, purity: f64, seed: u64) -> SyntheticLda {
    let mut rng = stream_rng(seed, 0);
    let mut docs = Vec::with_capacity(n_docs);
    let mut truth = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let topic = d % k;
        let tokens = (0..doc_len)
            .map(|_| {
                let t = if rng.gen::<f64>() < purity { topic } else { rng.gen_range(0..k) };
                t * words_per_topic + rng.gen_range(0..words_per_topic)
            })
            .collect();
        docs.push(TokenDoc {
            doc_id: format!("doc{d:04}"),
            tokens,
        });
        truth.push(topic);
    }
    SyntheticLda {
        docs,
        vocab_size: k * words_per_topic,
        truth,
    }
}

/// `n` citations over `disciplines` x `directions_per` directions and the
/// given year range.
pub fn random_labeled(n: usize, disciplines: usize, directions_per: usize, years: (i32, i32), seed: u64) -> Vec<LabeledCitation> {
    let mut rng = stream_rng(seed, 0);
    (0..n)
        .map(|i| {
            let d = rng.gen_range(0..disciplines);
            let r = rng.gen_range(0..directions_per);
            LabeledCitation {
                doc_id: format!("c{i}"),
                direction: format!("D{d}R{r}"),
                discipline: format!("D{d}"),
                year: rng.gen_range(years.0..=years.1),
            }
        })
        .collect()
}

/// Random records, then `planted` copies of earlier ones altered so they
/// still match by DOI or by title + year. Order is shuffled.
pub fn records_with_duplicates(n: usize, planted: usize, seed: u64) -> Vec<CitationRecord> {
    let mut rng = stream_rng(seed, 0);
    let words = ["spatial", "factor", "river", "soil", "urban", "health", "model", "carbon", "risk", "growth"];
    let mut records: Vec<CitationRecord> = (0..n)
        .map(|i| {
            let title: Vec<&str> = (0..4).map(|_| *words.choose(&mut rng).expect("non-empty")).collect();
            CitationRecord {
                record_id: format!("WOS:{i:09}"),
                title: title.join(" "),
                year: rng.gen_range(2008..=2022),
                abstract_text: String::new(),
                addresses: vec![],
                wos_categories: vec![],
                research_areas: vec![],
                doi: rng.gen_bool(0.7).then(|| format!("10.1000/x{}", rng.gen_range(0..n * 2))),
                url: None,
            }
        })
        .collect();
    for j in 0..planted {
        let mut copy = records[rng.gen_range(0..records.len())].clone();
        copy.record_id = format!("WOS:dup{j:06}");
        match rng.gen_range(0..3) {
            0 => copy.title = format!("{}!", copy.title.to_uppercase()),
            1 => copy.doi = copy.doi.map(|d| format!("https://doi.org/{}", d.to_uppercase())),
            _ => {
                copy.doi = None;
                copy.title = format!("  {}. ", copy.title);
            }
        }
        records.push(copy);
    }
    records.shuffle(&mut rng);
    records
}

/// A direction of the demo domain.
#[derive(Debug, Clone, Copy)]
pub struct DemoDirection {
    pub label: &'static str,
    pub discipline: &'static str,
    pub words: [&'static str; 10],
    /// New citations per year, 2010 to 2020.
    pub counts: [u64; 11],
}

pub const DEMO_FIRST_YEAR: i32 = 2010;
pub const DEMO_LAST_YEAR: i32 = 2020;

/// Disciplines in emergence order; ties follow this order.
pub const DEMO_DISCIPLINES: [&str; 5] = ["HS", "M&S", "GS", "AS", "AS&M"];

/// Every rate stays at or below 3 through 2015; 2016 and 2017 add new
/// directions; 2018 to 2020 add none.
pub const DEMO_DIRECTIONS: [DemoDirection; 9] = [
    DemoDirection {
        label: "malaria",
        discipline: "HS",
        words: ["malaria", "mosquito", "plasmodium", "vector", "parasite", "endemic", "febrile", "larval", "bednet", "anopheles"],
        counts: [1, 1, 2, 1, 2, 2, 6, 8, 10, 11, 12],
    },
    DemoDirection {
        label: "hfmd",
        discipline: "HS",
        words: ["enterovirus", "hfmd", "children", "pediatric", "outbreak", "daycare", "coxsackie", "infant", "kindergarten", "rash"],
        counts: [0, 0, 0, 0, 0, 0, 4, 6, 8, 9, 10],
    },
    DemoDirection {
        label: "geostratified",
        discipline: "M&S",
        words: ["sampling", "stratification", "estimator", "survey", "strata", "kriging", "unbiased", "allocation", "sandwich", "inference"],
        counts: [1, 0, 1, 2, 1, 2, 5, 7, 9, 10, 11],
    },
    DemoDirection {
        label: "gis",
        discipline: "GS",
        words: ["gis", "remote", "sensing", "raster", "satellite", "imagery", "landsat", "cartography", "geomatics", "pixel"],
        counts: [0, 1, 2, 2, 2, 2, 9, 12, 15, 16, 18],
    },
    DemoDirection {
        label: "rural development",
        discipline: "GS",
        words: ["rural", "poverty", "village", "farmers", "livelihood", "county", "township", "peasant", "migrant", "hukou"],
        counts: [0, 0, 1, 1, 2, 2, 7, 9, 12, 13, 14],
    },
    DemoDirection {
        label: "housing",
        discipline: "GS",
        words: ["housing", "rent", "dwelling", "apartment", "tenure", "affordability", "landlord", "homeownership", "mortgage", "tenant"],
        counts: [0, 0, 0, 0, 0, 0, 0, 3, 6, 7, 8],
    },
    DemoDirection {
        label: "soil organic carbon",
        discipline: "AS",
        words: ["soil", "carbon", "organic", "tillage", "cropland", "fertilizer", "nitrogen", "humus", "topsoil", "sequestration"],
        counts: [0, 1, 0, 1, 1, 2, 4, 6, 8, 9, 9],
    },
    DemoDirection {
        label: "climate change",
        discipline: "AS&M",
        words: ["climate", "warming", "temperature", "precipitation", "drought", "glacier", "monsoon", "greenhouse", "phenology", "snowfall"],
        counts: [0, 0, 0, 0, 0, 1, 3, 5, 7, 8, 9],
    },
    DemoDirection {
        label: "pm2.5",
        discipline: "AS&M",
        words: ["particulate", "aerosol", "haze", "smog", "pollutant", "dust", "ozone", "sulfate", "visibility", "exhaust"],
        counts: [0, 0, 0, 0, 0, 0, 0, 4, 7, 8, 9],
    },
];

/// Words every demo abstract draws on regardless of direction.
const DEMO_SHARED: [&str; 8] = [
    "geostatistic",
    "heterogeneity",
    "determinant",
    "explanatory",
    "detector",
    "driving",
    "stratified",
    "geographical",
];

/// `(address, weight)`; the last entry does not resolve.
const DEMO_AFFILIATIONS: [(&str, u32); 16] = [
    ("Peking Univ, Coll Urban & Environm Sci, Beijing 100871, Peoples R China", 40),
    ("Wuhan Univ, Sch Resource & Environm Sci, Wuhan 430079, Peoples R China", 12),
    ("Univ Calif Los Angeles, Dept Geog, Los Angeles, CA 90095 USA", 8),
    ("Univ Oxford, Sch Geog & Environm, Oxford OX1 3QY, England", 5),
    ("Univ Sydney, Sch Geosci, Sydney, NSW 2006, Australia", 3),
    ("Sapienza Univ Rome, Dept Earth Sci, I-00185 Rome, Italy", 3),
    ("Univ Tehran, Fac Geog, Tehran, Iran", 4),
    ("Indian Inst Technol, Dept Civil Engn, Kanpur 208016, Uttar Pradesh, India", 5),
    ("Univ Sao Paulo, Fac Saude Publ, Sao Paulo, Brazil", 3),
    ("Univ Ibadan, Dept Geog, Ibadan, Nigeria", 2),
    ("Addis Ababa Univ, Sch Publ Hlth, Addis Ababa, Ethiopia", 2),
    ("Univ Tokyo, Grad Sch Frontier Sci, Tokyo 1138654, Japan", 3),
    ("Humboldt Univ, Geog Inst, D-10099 Berlin, Germany", 3),
    ("Univ Cape Town, Dept Environm & Geog Sci, Cape Town, South Africa", 2),
    ("Tribhuvan Univ, Cent Dept Geog, Kathmandu, Nepal", 1),
    ("Independent Researcher, Atlantis", 1),
];

/// WoS categories per discipline.
fn demo_category(discipline: &str) -> (&'static str, &'static str) {
    match discipline {
        "HS" => ("Public, Environmental & Occupational Health", "Public, Environmental & Occupational Health"),
        "M&S" => ("Statistics & Probability", "Mathematics"),
        "GS" => ("Geography", "Geography"),
        "AS" => ("Soil Science", "Agriculture"),
        _ => ("Meteorology & Atmospheric Sciences", "Meteorology & Atmospheric Sciences"),
    }
}

pub fn demo_taxonomy() -> Taxonomy {
    Taxonomy::new(DEMO_DISCIPLINES.iter().map(|&d| {
        (
            d.to_string(),
            DEMO_DIRECTIONS
                .iter()
                .filter(|r| r.discipline == d)
                .map(|r| r.label.to_string())
                .collect::<Vec<_>>(),
        )
    }))
    .expect("demo taxonomy is a partition")
}

/// Per-direction diffusion series of the demo schedule.
pub fn demo_series() -> Vec<DiffusionSeries> {
    DEMO_DIRECTIONS
        .iter()
        .map(|r| {
            let counts = (DEMO_FIRST_YEAR..=DEMO_LAST_YEAR).zip(r.counts).collect();
            DiffusionSeries::new(r.label, counts)
        })
        .collect()
}

/// The demo corpus and its true direction per record id. Besides the
/// scheduled citations it holds a few duplicates and out-of-window records.
pub fn demo_corpus(seed: u64) -> (Corpus, BTreeMap<String, &'static str>) {
    let mut rng = stream_rng(seed, 0);
    let total_weight: u32 = DEMO_AFFILIATIONS.iter().map(|a| a.1).sum();
    let pick_address = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut x = rng.gen_range(0..total_weight);
        for (addr, w) in DEMO_AFFILIATIONS {
            if x < w {
                return addr;
            }
            x -= w;
        }
        unreachable!()
    };
    let mut records = Vec::new();
    let mut truth = BTreeMap::new();
    let make = |rng: &mut rand_chacha::ChaCha8Rng, dir: &DemoDirection, year: i32, serial: usize| {
        let mut words = |n: usize| {
            (0..n)
                .map(|_| {
                    if rng.gen::<f64>() < 0.95 {
                        *dir.words.choose(rng).expect("non-empty")
                    } else {
                        *DEMO_SHARED.choose(rng).expect("non-empty")
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let title = format!("{} {serial}", words(6));
        let abstract_text = format!("{}.", words(40));
        let (wc, sc) = demo_category(dir.discipline);
        CitationRecord {
            record_id: format!("WOS:{:015}", 500_000 + serial),
            title,
            year,
            abstract_text,
            addresses: vec![],
            wos_categories: vec![wc.to_string()],
            research_areas: vec![sc.to_string()],
            doi: Some(format!("10.5555/demo.{serial}")),
            url: None,
        }
    };
    let mut serial = 0;
    for (yi, year) in (DEMO_FIRST_YEAR..=DEMO_LAST_YEAR).enumerate() {
        for dir in &DEMO_DIRECTIONS {
            for _ in 0..dir.counts[yi] {
                let mut rec = make(&mut rng, dir, year, serial);
                rec.addresses = vec![format!("[Author {serial}] {}", pick_address(&mut rng))];
                truth.insert(rec.record_id.clone(), dir.label);
                records.push(rec);
                serial += 1;
            }
        }
    }
    for (k, year) in [(0usize, 2008), (1, 2023)] {
        let mut rec = make(&mut rng, &DEMO_DIRECTIONS[k], year, serial);
        rec.addresses = vec![pick_address(&mut rng).to_string()];
        records.push(rec);
        serial += 1;
    }
    // duplicates of existing records under new ids
    for j in 0..4 {
        let i = rng.gen_range(0..truth.len());
        let mut dup = records[i].clone();
        dup.record_id = format!("WOS:{:015}", 900_000 + j);
        if j % 2 == 1 {
            dup.doi = None;
        }
        records.push(dup);
    }
    records.shuffle(&mut rng);
    (Corpus::new("synthetic demo", records), truth)
}

/// Approximate, illustrative economy profiles for the demo countries
/// (income class around fiscal 2021, rough share of world S&E articles).
pub const DEMO_ECONOMY_PROFILES: &str = include_str!("../data/economy_profiles.csv");
