//! Time-sliced projections of the full network.
//!
//! A repaired network projects into three kinds of partial networks:
//! within-era (both endpoints share an era), inter-era (source era strictly
//! before target era, read as bipartite), and accumulated-era (everything up
//! to and including a target era). The module also derives the era-to-era
//! link matrix, its column-normalized percentage view, and the
//! alive-per-year series.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EraScheme, InfluenceNetwork};

/// Which projection a [`PartialNetwork`] is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum SliceKind {
    /// Edges whose endpoints both live in the given era.
    Within(usize),
    /// Edges from an earlier era to a strictly later one.
    Inter(usize, usize),
    /// All scholars with era <= the target, with all edges among them.
    Accumulated(usize),
}

impl fmt::Display for SliceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliceKind::Within(e) => write!(f, "within:{e}"),
            SliceKind::Inter(s, t) => write!(f, "inter:{s}:{t}"),
            SliceKind::Accumulated(e) => write!(f, "accumulated:{e}"),
        }
    }
}

impl std::str::FromStr for SliceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse = |p: &str| -> Result<usize> {
            p.parse().map_err(|_| Error::InvalidSlice(format!("bad era index `{p}`")))
        };
        match parts.as_slice() {
            ["within", e] => Ok(SliceKind::Within(parse(e)?)),
            ["inter", a, b] => Ok(SliceKind::Inter(parse(a)?, parse(b)?)),
            ["accumulated", e] => Ok(SliceKind::Accumulated(parse(e)?)),
            _ => Err(Error::InvalidSlice(format!(
                "`{s}` (expected within:E, inter:S:T, or accumulated:E)"
            ))),
        }
    }
}

/// A within-era, inter-era, or accumulated-era projection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialNetwork {
    pub kind: SliceKind,
    pub nodes: BTreeSet<String>,
    pub edges: BTreeSet<(String, String)>,
    /// Source-side node set; populated for inter slices only.
    pub sources: BTreeSet<String>,
    /// Target-side node set; populated for inter slices only.
    pub targets: BTreeSet<String>,
}

impl PartialNetwork {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Graphviz DOT rendering with scholar labels, nodes and edges in
    /// deterministic order.
    pub fn to_dot(&self, network: &InfluenceNetwork) -> String {
        let mut out = format!("digraph \"{}\" {{\n", self.kind);
        for id in &self.nodes {
            let label = network.scholar(id).map(|s| s.label.as_str()).unwrap_or(id);
            out.push_str(&format!("  \"{id}\" [label=\"{}\"];\n", label.replace('"', "\\\"")));
        }
        for (s, t) in &self.edges {
            out.push_str(&format!("  \"{s}\" -> \"{t}\";\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// Project the network onto one slice.
///
/// Within-era node sets contain only scholars incident to a within-era edge,
/// so the participation ratio N/A is observable. Accumulated slices keep
/// every scholar of the covered eras, including isolated ones.
pub fn slice(network: &InfluenceNetwork, kind: SliceKind) -> Result<PartialNetwork> {
    let era_count = network.era_scheme().len();
    let check_era = |e: usize| -> Result<()> {
        if e >= era_count {
            Err(Error::InvalidSlice(format!("era index {e} out of range (eras: {era_count})")))
        } else {
            Ok(())
        }
    };

    let mut pn = PartialNetwork {
        kind,
        nodes: BTreeSet::new(),
        edges: BTreeSet::new(),
        sources: BTreeSet::new(),
        targets: BTreeSet::new(),
    };

    match kind {
        SliceKind::Within(e) => {
            check_era(e)?;
            for (s, t) in network.edges() {
                if network.era_of(s)? == e && network.era_of(t)? == e {
                    pn.nodes.insert(s.to_owned());
                    pn.nodes.insert(t.to_owned());
                    pn.edges.insert((s.to_owned(), t.to_owned()));
                }
            }
        }
        SliceKind::Inter(source_era, target_era) => {
            if source_era >= target_era {
                return Err(Error::InvalidSlice(format!(
                    "inter slice requires source era < target era, got {source_era} >= {target_era}"
                )));
            }
            check_era(target_era)?;
            for (s, t) in network.edges() {
                if network.era_of(s)? == source_era && network.era_of(t)? == target_era {
                    pn.nodes.insert(s.to_owned());
                    pn.nodes.insert(t.to_owned());
                    pn.sources.insert(s.to_owned());
                    pn.targets.insert(t.to_owned());
                    pn.edges.insert((s.to_owned(), t.to_owned()));
                }
            }
        }
        SliceKind::Accumulated(e) => {
            check_era(e)?;
            for scholar in network.scholars() {
                let era = scholar.era_index.ok_or_else(|| Error::MissingEra(scholar.id.clone()))?;
                if era <= e {
                    pn.nodes.insert(scholar.id.clone());
                }
            }
            for (s, t) in network.edges() {
                if network.era_of(s)? <= e && network.era_of(t)? <= e {
                    pn.edges.insert((s.to_owned(), t.to_owned()));
                }
            }
        }
    }
    Ok(pn)
}

/// Every within-era and inter-era slice of a repaired network, in
/// deterministic order: within 0..K, then inter pairs in lexicographic
/// `(source, target)` order.
pub fn all_flat_slices(network: &InfluenceNetwork) -> Result<Vec<PartialNetwork>> {
    let k = network.era_scheme().len();
    let mut slices = Vec::with_capacity(k + k * (k - 1) / 2);
    for e in 0..k {
        slices.push(slice(network, SliceKind::Within(e))?);
    }
    for s in 0..k {
        for t in (s + 1)..k {
            slices.push(slice(network, SliceKind::Inter(s, t))?);
        }
    }
    Ok(slices)
}

/// K x K matrix of link counts from source era (row) to target era (column).
/// Entries below the diagonal stay zero for a repaired network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EraLinkMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl EraLinkMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// CSV with era names as row/column headers.
    pub fn to_csv(&self, scheme: &EraScheme) -> String {
        matrix_csv(scheme, &self.counts, |v| v.to_string())
    }
}

fn matrix_csv<T>(scheme: &EraScheme, rows: &[Vec<T>], fmt_cell: impl Fn(&T) -> String) -> String {
    let mut out = String::from("era");
    for era in scheme.eras() {
        out.push(',');
        out.push_str(&era.name);
    }
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        out.push_str(scheme.name(i));
        for cell in row {
            out.push(',');
            out.push_str(&fmt_cell(cell));
        }
        out.push('\n');
    }
    out
}

/// Count links between every pair of eras.
pub fn link_matrix(network: &InfluenceNetwork) -> Result<EraLinkMatrix> {
    let k = network.era_scheme().len();
    let mut counts = vec![vec![0u64; k]; k];
    for (s, t) in network.edges() {
        counts[network.era_of(s)?][network.era_of(t)?] += 1;
    }
    Ok(EraLinkMatrix { counts })
}

/// Column-normalized view of the link matrix: what fraction of the influence
/// received by each era came from each source era.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReceivedPercentages {
    pub fractions: Vec<Vec<f64>>,
    /// Eras that received no links at all; their columns are all zero.
    pub zero_columns: Vec<usize>,
}

impl ReceivedPercentages {
    pub fn to_csv(&self, scheme: &EraScheme) -> String {
        matrix_csv(scheme, &self.fractions, |v| format!("{v}"))
    }
}

/// Normalize each column of the link matrix to sum to one.
pub fn received_percentages(matrix: &EraLinkMatrix) -> ReceivedPercentages {
    let k = matrix.counts.len();
    let mut fractions = vec![vec![0f64; k]; k];
    let mut zero_columns = Vec::new();
    for col in 0..k {
        let total: u64 = (0..k).map(|row| matrix.counts[row][col]).sum();
        if total == 0 {
            zero_columns.push(col);
            continue;
        }
        for row in 0..k {
            fractions[row][col] = matrix.counts[row][col] as f64 / total as f64;
        }
    }
    ReceivedPercentages { fractions, zero_columns }
}

/// Per-era counts of scholars alive in each year of a range, grouped by
/// their assigned era.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlivePerYear {
    pub start_year: i32,
    pub end_year: i32,
    /// `counts[era][year - start_year]`
    pub counts: Vec<Vec<u32>>,
}

impl AlivePerYear {
    pub fn count(&self, era: usize, year: i32) -> u32 {
        if year < self.start_year || year > self.end_year {
            return 0;
        }
        self.counts[era][(year - self.start_year) as usize]
    }

    /// CSV: `year` column plus one column per era.
    pub fn to_csv(&self, scheme: &EraScheme) -> String {
        let mut out = String::from("year");
        for era in scheme.eras() {
            out.push(',');
            out.push_str(&era.name);
        }
        out.push('\n');
        for (offset, year) in (self.start_year..=self.end_year).enumerate() {
            out.push_str(&year.to_string());
            for era_counts in &self.counts {
                out.push(',');
                out.push_str(&era_counts[offset].to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// For each year in the range and each era, how many scholars assigned to
/// that era were alive (birth <= year <= death).
pub fn alive_per_year(network: &InfluenceNetwork, years: RangeInclusive<i32>) -> AlivePerYear {
    let (start, end) = (*years.start(), *years.end());
    let k = network.era_scheme().len();
    let width = (end - start + 1).max(0) as usize;
    // Difference array per era: +1 at birth, -1 just past death.
    let mut deltas = vec![vec![0i64; width + 1]; k];
    for scholar in network.scholars() {
        let Some(era) = scholar.era_index else { continue };
        if era >= k {
            continue;
        }
        let lo = scholar.birth_year.max(start);
        let hi = scholar.death_year.min(end);
        if lo > hi {
            continue;
        }
        deltas[era][(lo - start) as usize] += 1;
        deltas[era][(hi - start) as usize + 1] -= 1;
    }
    let counts = deltas
        .into_iter()
        .map(|delta| {
            let mut running = 0i64;
            delta[..width]
                .iter()
                .map(|d| {
                    running += d;
                    running as u32
                })
                .collect()
        })
        .collect();
    AlivePerYear { start_year: start, end_year: end, counts }
}
