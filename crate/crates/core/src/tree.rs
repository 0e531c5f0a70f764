//! Evolution trees: branches are type variables, twigs are stage or time
//! variables, leaves are citations (or aggregated citation counts).
//!
//! Three builders cover the discipline / research-direction trees per
//! period, the knowledge evolution tree across diffusion stages, and the
//! factor tree of economies by income type and development stage.

use crate::diffusion::{Stage, StageTimeline};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TreeError {
    #[error("year {0} is not covered by the stage timeline")]
    UncoveredYear(i32),
    #[error("no economy profile for {0:?}")]
    MissingProfile(String),
    #[error("invalid period {0}..={1}")]
    InvalidPeriod(i32, i32),
    #[error("economy profile line {line}: {reason}")]
    Profile { line: usize, reason: String },
    #[error("tree json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeKind {
    DisciplineDirection,
    KnowledgeEvolution,
    Factor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub id: String,
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Twig {
    pub label: String,
    pub leaves: Vec<Leaf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub label: String,
    pub order_key: i64,
    pub twigs: Vec<Twig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolutionTree {
    #[serde(rename = "root")]
    pub root_label: String,
    pub kind: TreeKind,
    pub branches: Vec<Branch>,
}

impl EvolutionTree {
    pub fn leaf_total(&self) -> u64 {
        self.leaves().map(|l| l.size).sum()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Leaf> {
        self.branches
            .iter()
            .flat_map(|b| b.twigs.iter())
            .flat_map(|t| t.leaves.iter())
    }

    pub fn twig_count(&self) -> usize {
        self.branches.iter().map(|b| b.twigs.len()).sum()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    pub fn branch(&self, label: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.label == label)
    }

    /// Sum of leaf sizes per branch, in branch order.
    pub fn branch_totals(&self) -> Vec<(String, u64)> {
        self.branches
            .iter()
            .map(|b| {
                let total = b.twigs.iter().flat_map(|t| &t.leaves).map(|l| l.size).sum();
                (b.label.clone(), total)
            })
            .collect()
    }
}

/// A classified citation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCitation {
    pub doc_id: String,
    pub direction: String,
    pub discipline: String,
    pub year: i32,
}

/// How equal emergence years are ordered.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum TieBreak {
    /// Lexicographic by label.
    #[default]
    Label,
    /// By position in the list; unlisted labels go last, lexicographically.
    Rank(Vec<String>),
}

impl TieBreak {
    fn key<'a>(&self, label: &'a str) -> (usize, &'a str) {
        match self {
            TieBreak::Label => (0, label),
            TieBreak::Rank(order) => (order.iter().position(|l| l == label).unwrap_or(usize::MAX), label),
        }
    }
}

/// Labels sorted by first year of appearance, ties per `tie`.
fn by_emergence<'a>(first_years: &HashMap<&'a str, i32>, tie: &TieBreak) -> Vec<(&'a str, i32)> {
    let mut v: Vec<(&str, i32)> = first_years.iter().map(|(&l, &y)| (l, y)).collect();
    v.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| tie.key(a.0).cmp(&tie.key(b.0))));
    v
}

fn first_years<'a>(items: impl Iterator<Item = (&'a str, i32)>) -> HashMap<&'a str, i32> {
    let mut m: HashMap<&str, i32> = HashMap::new();
    for (label, year) in items {
        m.entry(label).and_modify(|y| *y = (*y).min(year)).or_insert(year);
    }
    m
}

/// One leaf per citation of the period. Branch and twig order follows
/// emergence across the whole input, so successive periods share a layout.
pub fn build_discipline_direction_tree(
    labeled: &[LabeledCitation],
    period: (i32, i32),
    tie: &TieBreak,
) -> Result<EvolutionTree, TreeError> {
    let (lo, hi) = period;
    if lo > hi {
        return Err(TreeError::InvalidPeriod(lo, hi));
    }
    let discipline_first = first_years(labeled.iter().map(|c| (c.discipline.as_str(), c.year)));
    let direction_first = first_years(labeled.iter().map(|c| (c.direction.as_str(), c.year)));
    let in_period: Vec<&LabeledCitation> = labeled.iter().filter(|c| (lo..=hi).contains(&c.year)).collect();

    let mut branches = Vec::new();
    for (discipline, emerged) in by_emergence(&discipline_first, tie) {
        let members: Vec<&&LabeledCitation> = in_period.iter().filter(|c| c.discipline == discipline).collect();
        if members.is_empty() {
            continue;
        }
        let dirs: HashMap<&str, i32> = members
            .iter()
            .map(|c| (c.direction.as_str(), direction_first[c.direction.as_str()]))
            .collect();
        let twigs = by_emergence(&dirs, tie)
            .into_iter()
            .map(|(direction, _)| Twig {
                label: direction.to_string(),
                leaves: members
                    .iter()
                    .filter(|c| c.direction == direction)
                    .map(|c| Leaf {
                        id: c.doc_id.clone(),
                        size: 1,
                    })
                    .collect(),
            })
            .collect();
        branches.push(Branch {
            label: discipline.to_string(),
            order_key: emerged as i64,
            twigs,
        });
    }
    let root_label = if lo == hi { lo.to_string() } else { format!("{lo}-{hi}") };
    Ok(EvolutionTree {
        root_label,
        kind: TreeKind::DisciplineDirection,
        branches,
    })
}

/// Disciplines as branches, the three stages as twigs, and one leaf per
/// direction sized by its citations within the stage.
pub fn build_knowledge_evolution_tree(
    labeled: &[LabeledCitation],
    timeline: &StageTimeline,
    tie: &TieBreak,
) -> Result<EvolutionTree, TreeError> {
    let mut counts: BTreeMap<(&str, Stage, &str), u64> = BTreeMap::new();
    for c in labeled {
        let stage = timeline.stage_of(c.year).ok_or(TreeError::UncoveredYear(c.year))?;
        *counts
            .entry((c.discipline.as_str(), stage, c.direction.as_str()))
            .or_default() += 1;
    }
    let discipline_first = first_years(labeled.iter().map(|c| (c.discipline.as_str(), c.year)));
    let direction_first = first_years(labeled.iter().map(|c| (c.direction.as_str(), c.year)));

    let branches = by_emergence(&discipline_first, tie)
        .into_iter()
        .map(|(discipline, emerged)| {
            let twigs = Stage::ALL
                .iter()
                .map(|&stage| {
                    let present: HashMap<&str, i32> = counts
                        .keys()
                        .filter(|(d, s, _)| *d == discipline && *s == stage)
                        .map(|(_, _, r)| (*r, direction_first[r]))
                        .collect();
                    Twig {
                        label: stage.to_string(),
                        leaves: by_emergence(&present, tie)
                            .into_iter()
                            .map(|(r, _)| Leaf {
                                id: r.to_string(),
                                size: counts[&(discipline, stage, r)],
                            })
                            .collect(),
                    }
                })
                .collect();
            Branch {
                label: discipline.to_string(),
                order_key: emerged as i64,
                twigs,
            }
        })
        .collect();
    let root_label = match (timeline.stages.keys().next(), timeline.stages.keys().next_back()) {
        (Some(a), Some(b)) => format!("{a}-{b}"),
        _ => "knowledge".to_string(),
    };
    Ok(EvolutionTree {
        root_label,
        kind: TreeKind::KnowledgeEvolution,
        branches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IncomeType {
    High,
    UpperMiddle,
    LowerMiddle,
    Low,
}

impl IncomeType {
    pub const ALL: [IncomeType; 4] = [
        IncomeType::High,
        IncomeType::UpperMiddle,
        IncomeType::LowerMiddle,
        IncomeType::Low,
    ];
}

impl fmt::Display for IncomeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IncomeType::High => "High",
            IncomeType::UpperMiddle => "UpperMiddle",
            IncomeType::LowerMiddle => "LowerMiddle",
            IncomeType::Low => "Low",
        })
    }
}

impl std::str::FromStr for IncomeType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match norm.as_str() {
            "high" | "h" | "highincome" => Ok(IncomeType::High),
            "uppermiddle" | "um" | "uppermiddleincome" => Ok(IncomeType::UpperMiddle),
            "lowermiddle" | "lm" | "lowermiddleincome" => Ok(IncomeType::LowerMiddle),
            "low" | "l" | "lowincome" => Ok(IncomeType::Low),
            _ => Err(format!("unknown income type {s:?}")),
        }
    }
}

/// Development stage from the share of global S&E article output:
/// below 1% is stage 1, 1%-3% inclusive is stage 2, above 3% is stage 3.
pub fn dev_stage(se_share: f64) -> u8 {
    if se_share < 0.01 {
        1
    } else if se_share <= 0.03 {
        2
    } else {
        3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomyProfile {
    pub country: String,
    pub income_type: IncomeType,
    pub se_share: f64,
}

impl EconomyProfile {
    pub fn dev_stage(&self) -> u8 {
        dev_stage(self.se_share)
    }
}

/// Reads `country,income_type,se_share` rows (header required, `#` lines
/// skipped). `se_share` is a fraction in `[0, 1]`.
pub fn parse_economy_profiles(text: &str) -> Result<Vec<EconomyProfile>, TreeError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let err = |reason: String| TreeError::Profile { line: i + 2, reason };
        let row = row.map_err(|e| err(e.to_string()))?;
        if row.len() != 3 {
            return Err(err(format!("expected 3 columns, found {}", row.len())));
        }
        let income_type = row[1].parse().map_err(err)?;
        let se_share: f64 = row[2].parse().map_err(|_| err(format!("bad se_share {:?}", &row[2])))?;
        if !(0.0..=1.0).contains(&se_share) {
            return Err(err(format!("se_share {se_share} outside [0, 1]")));
        }
        out.push(EconomyProfile {
            country: row[0].to_string(),
            income_type,
            se_share,
        });
    }
    Ok(out)
}

pub fn stage_twig_label(stage: u8) -> String {
    format!("Stage {stage}")
}

/// Income types as branches (High to Low), development stages as twigs, one
/// leaf per economy with citations.
pub fn build_factor_tree(
    citations_by_country: &BTreeMap<String, u64>,
    profiles: &[EconomyProfile],
) -> Result<EvolutionTree, TreeError> {
    let by_country: HashMap<&str, &EconomyProfile> = profiles.iter().map(|p| (p.country.as_str(), p)).collect();
    let mut placed: BTreeMap<(IncomeType, u8), Vec<Leaf>> = BTreeMap::new();
    for (country, &count) in citations_by_country {
        if count == 0 {
            continue;
        }
        let p = by_country
            .get(country.as_str())
            .ok_or_else(|| TreeError::MissingProfile(country.clone()))?;
        placed.entry((p.income_type, p.dev_stage())).or_default().push(Leaf {
            id: country.clone(),
            size: count,
        });
    }
    let branches = IncomeType::ALL
        .iter()
        .enumerate()
        .map(|(i, &income)| Branch {
            label: income.to_string(),
            order_key: i as i64,
            twigs: (1..=3u8)
                .map(|stage| Twig {
                    label: stage_twig_label(stage),
                    leaves: placed.remove(&(income, stage)).unwrap_or_default(),
                })
                .collect(),
        })
        .collect();
    Ok(EvolutionTree {
        root_label: "economies".to_string(),
        kind: TreeKind::Factor,
        branches,
    })
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz DOT: one node per root/branch/twig/leaf and a parent edge for
/// every non-root node. Leaf `width` is proportional to leaf size.
pub fn to_dot(tree: &EvolutionTree) -> String {
    let max_size = tree.leaves().map(|l| l.size).max().unwrap_or(1).max(1) as f64;
    let mut out = String::from("digraph evolution_tree {\n  rankdir=BT;\n");
    let mut edges = String::new();
    let mut next = 0usize;
    let mut node = |out: &mut String, label: &str, attrs: &str| {
        let id = next;
        next += 1;
        let _ = writeln!(out, "  n{id} [label=\"{}\"{attrs}];", dot_escape(label));
        id
    };
    let root = node(&mut out, &tree.root_label, ", shape=box");
    for b in &tree.branches {
        let bid = node(&mut out, &b.label, ", shape=ellipse");
        let _ = writeln!(edges, "  n{root} -> n{bid};");
        for t in &b.twigs {
            let tid = node(&mut out, &t.label, ", shape=plaintext");
            let _ = writeln!(edges, "  n{bid} -> n{tid};");
            for l in &t.leaves {
                let width = 1.5 * l.size as f64 / max_size;
                let attrs = format!(", shape=circle, fixedsize=true, width={width:.4}, xlabel=\"{}\"", l.size);
                let lid = node(&mut out, &l.id, &attrs);
                let _ = writeln!(edges, "  n{tid} -> n{lid};");
            }
        }
    }
    out.push_str(&edges);
    out.push_str("}\n");
    out
}

pub fn to_json(tree: &EvolutionTree) -> String {
    serde_json::to_string_pretty(tree).expect("tree serializes")
}

pub fn from_json(text: &str) -> Result<EvolutionTree, TreeError> {
    serde_json::from_str(text).map_err(|e| TreeError::Json(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeFormat {
    Dot,
    Json,
}

pub fn serialize_tree(tree: &EvolutionTree, format: TreeFormat) -> String {
    match format {
        TreeFormat::Dot => to_dot(tree),
        TreeFormat::Json => to_json(tree),
    }
}
