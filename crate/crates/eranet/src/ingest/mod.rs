//! Input parsing, date imputation, entity filtering, and data corrections.
//!
//! Node and edge files are UTF-8 delimited text (comma or tab, autodetected
//! from the header line). Malformed rows never abort a run: they are
//! collected into a rejects report with their line numbers so batch runs can
//! account for every input row.

pub mod sparql;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EraScheme, InfluenceEdge, InfluenceNetwork, Scholar};

/// An actor row as parsed from the node file, before imputation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawActorRecord {
    pub id: String,
    pub label: String,
    pub birth_year: Option<i32>,
    pub death_year: Option<i32>,
}

/// A rejected input row: which file, which line, and why.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RejectedRow {
    pub file: String,
    pub line: u64,
    pub reason: String,
}

/// Bookkeeping from [`parse_inputs`]: rejects plus dedup counters.
#[derive(Clone, Debug, Default)]
pub struct ParseReport {
    pub rejects: Vec<RejectedRow>,
    pub duplicate_edges: u64,
    pub duplicate_ids: u64,
}

fn detect_delimiter(path: &Path) -> Result<u8> {
    let text = std::fs::read_to_string(path)?;
    let header = text.lines().next().ok_or_else(|| Error::Parse {
        file: path.display().to_string(),
        message: "missing header line".into(),
    })?;
    Ok(if header.contains('\t') { b'\t' } else { b',' })
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let delimiter = detect_delimiter(path)?;
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse { file: path.display().to_string(), message: e.to_string() })
}

fn check_header(path: &Path, headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<String> = headers.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    if got != expected {
        return Err(Error::Parse {
            file: path.display().to_string(),
            message: format!("expected header `{}`, got `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn parse_year(field: &str) -> std::result::Result<Option<i32>, String> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse::<i32>().map(Some).map_err(|_| format!("invalid year `{field}`"))
}

/// Parse node and edge files into raw records and deduplicated edges.
///
/// Well-formed rows become records; malformed rows land in the rejects
/// report with their line numbers. Self-loops are rejected here, and
/// duplicate edges or node ids are dropped with a count.
pub fn parse_inputs(
    node_path: impl AsRef<Path>,
    edge_path: impl AsRef<Path>,
) -> Result<(Vec<RawActorRecord>, Vec<InfluenceEdge>, ParseReport)> {
    let node_path = node_path.as_ref();
    let edge_path = edge_path.as_ref();
    let mut report = ParseReport::default();

    let mut records = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut node_reader = reader(node_path)?;
    let headers = node_reader
        .headers()
        .map_err(|e| Error::Parse { file: node_path.display().to_string(), message: e.to_string() })?
        .clone();
    check_header(node_path, &headers, &["id", "label", "birth", "death"])?;

    for row in node_reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                report.rejects.push(RejectedRow {
                    file: node_path.display().to_string(),
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let reject = |reason: String, report: &mut ParseReport| {
            report.rejects.push(RejectedRow {
                file: node_path.display().to_string(),
                line,
                reason,
            });
        };
        if row.len() != 4 {
            reject(format!("expected 4 fields, got {}", row.len()), &mut report);
            continue;
        }
        let id = row[0].to_owned();
        if id.is_empty() {
            reject("empty id".into(), &mut report);
            continue;
        }
        if !seen_ids.insert(id.clone()) {
            report.duplicate_ids += 1;
            reject(format!("duplicate id `{id}`"), &mut report);
            continue;
        }
        let birth = match parse_year(&row[2]) {
            Ok(y) => y,
            Err(msg) => {
                reject(format!("birth: {msg}"), &mut report);
                continue;
            }
        };
        let death = match parse_year(&row[3]) {
            Ok(y) => y,
            Err(msg) => {
                reject(format!("death: {msg}"), &mut report);
                continue;
            }
        };
        records.push(RawActorRecord { id, label: row[1].to_owned(), birth_year: birth, death_year: death });
    }

    let mut edges = Vec::new();
    let mut seen_edges = HashSet::new();
    let mut edge_reader = reader(edge_path)?;
    let headers = edge_reader
        .headers()
        .map_err(|e| Error::Parse { file: edge_path.display().to_string(), message: e.to_string() })?
        .clone();
    check_header(edge_path, &headers, &["source", "target"])?;

    for row in edge_reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                report.rejects.push(RejectedRow {
                    file: edge_path.display().to_string(),
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let reject = |reason: String, report: &mut ParseReport| {
            report.rejects.push(RejectedRow {
                file: edge_path.display().to_string(),
                line,
                reason,
            });
        };
        if row.len() != 2 {
            reject(format!("expected 2 fields, got {}", row.len()), &mut report);
            continue;
        }
        let (source, target) = (row[0].to_owned(), row[1].to_owned());
        if source.is_empty() || target.is_empty() {
            reject("empty endpoint".into(), &mut report);
            continue;
        }
        if source == target {
            reject(format!("self-loop at {source}"), &mut report);
            continue;
        }
        if !seen_edges.insert((source.clone(), target.clone())) {
            report.duplicate_edges += 1;
            log::warn!("{edge_path:?}:{line}: duplicate edge {source} -> {target} dropped", edge_path = edge_path);
            continue;
        }
        edges.push(InfluenceEdge::new(source, target));
    }

    Ok((records, edges, report))
}

/// Outcome of imputing one record's dates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Imputation {
    Resolved(Scholar),
    /// Both dates missing: the record needs manual completion and is emitted
    /// to a side file instead of being guessed.
    Unresolved(RawActorRecord),
}

/// Fill a missing date from the other one: a missing birth becomes
/// `death - span`, a missing death becomes `min(birth + span, horizon)`.
/// Provided dates pass through bit-exactly.
pub fn impute_dates(record: &RawActorRecord, span: i32, horizon: i32) -> Imputation {
    let (birth, death, birth_imputed, death_imputed) = match (record.birth_year, record.death_year) {
        (Some(b), Some(d)) => (b, d, false, false),
        (None, Some(d)) => (d - span, d, true, false),
        (Some(b), None) => (b, (b + span).min(horizon), false, true),
        (None, None) => return Imputation::Unresolved(record.clone()),
    };
    Imputation::Resolved(Scholar {
        id: record.id.clone(),
        label: record.label.clone(),
        birth_year: birth,
        death_year: death,
        birth_imputed,
        death_imputed,
        era_index: None,
    })
}

/// Why an entity is excluded from the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterReason {
    Concept,
    Legendary,
    Band,
    Other,
}

impl fmt::Display for FilterReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FilterReason::Concept => "concept",
            FilterReason::Legendary => "legendary",
            FilterReason::Band => "band",
            FilterReason::Other => "other",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for FilterReason {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "concept" => Ok(FilterReason::Concept),
            "legendary" => Ok(FilterReason::Legendary),
            "band" => Ok(FilterReason::Band),
            "other" => Ok(FilterReason::Other),
            other => Err(format!("unknown filter reason `{other}`")),
        }
    }
}

/// One exclusion rule: an id or `*`-glob plus a reason tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterRule {
    pub pattern: String,
    pub reason: FilterReason,
}

/// Exclusion list for entities that are not intellectuals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FilterRules {
    pub rules: Vec<FilterRule>,
}

impl FilterRules {
    /// Parse rules from lines of `<id-or-glob>,<reason>`. Blank lines and
    /// `#` comments are skipped.
    pub fn from_str(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (pattern, reason) = line.rsplit_once(',').ok_or_else(|| Error::Parse {
                file: "filter rules".into(),
                message: format!("line {}: expected `<id-or-glob>,<reason>`", i + 1),
            })?;
            let reason = reason.parse().map_err(|msg| Error::Parse {
                file: "filter rules".into(),
                message: format!("line {}: {msg}", i + 1),
            })?;
            rules.push(FilterRule { pattern: pattern.trim().to_owned(), reason });
        }
        Ok(FilterRules { rules })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_str(&std::fs::read_to_string(path)?)
    }

    fn matches(&self, id: &str) -> Option<FilterReason> {
        self.rules.iter().find(|r| glob_match(&r.pattern, id)).map(|r| r.reason)
    }
}

/// Match `text` against a pattern where `*` matches any (possibly empty)
/// substring. Everything else is literal.
fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0usize, 0usize);
    let (mut star, mut star_ti) = (None, 0usize);
    while ti < t.len() {
        if pi < p.len() && (p[pi] == t[ti]) {
            pi += 1;
            ti += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some(pi);
            star_ti = ti;
            pi += 1;
        } else if let Some(s) = star {
            pi = s + 1;
            star_ti += 1;
            ti = star_ti;
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == '*' {
        pi += 1;
    }
    pi == p.len()
}

/// A record removed by filtering, with the rule's reason tag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Removal {
    pub id: String,
    pub reason: FilterReason,
}

/// Drop records matching the exclusion rules; edges incident to removed ids
/// are dropped as well. Returns the survivors plus a removal report.
pub fn apply_filters(
    records: Vec<RawActorRecord>,
    edges: Vec<InfluenceEdge>,
    rules: &FilterRules,
) -> (Vec<RawActorRecord>, Vec<InfluenceEdge>, Vec<Removal>) {
    let mut removals = Vec::new();
    let mut removed_ids = HashSet::new();
    let mut kept_records = Vec::with_capacity(records.len());
    for record in records {
        match rules.matches(&record.id) {
            Some(reason) => {
                removed_ids.insert(record.id.clone());
                removals.push(Removal { id: record.id, reason });
            }
            None => kept_records.push(record),
        }
    }
    let kept_edges = edges
        .into_iter()
        .filter(|e| !removed_ids.contains(&e.source) && !removed_ids.contains(&e.target))
        .collect();
    (kept_records, kept_edges, removals)
}

/// An upstream data fix: a corrected date or a flipped edge direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Correction {
    SetBirth { id: String, year: i32 },
    SetDeath { id: String, year: i32 },
    FlipEdge { source: String, target: String },
}

/// Parse corrections from lines of `<scholar-id>,birth|death,<year>` or
/// `flip,<source>,<target>`.
pub fn parse_corrections(text: &str) -> Result<Vec<Correction>> {
    let mut corrections = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let err = |message: String| Error::Parse {
            file: "corrections".into(),
            message: format!("line {}: {message}", i + 1),
        };
        match fields.as_slice() {
            ["flip", source, target] => corrections.push(Correction::FlipEdge {
                source: (*source).to_owned(),
                target: (*target).to_owned(),
            }),
            [id, which @ ("birth" | "death"), year] => {
                let year: i32 = year.parse().map_err(|_| err(format!("invalid year `{year}`")))?;
                let id = (*id).to_owned();
                corrections.push(match *which {
                    "birth" => Correction::SetBirth { id, year },
                    _ => Correction::SetDeath { id, year },
                });
            }
            _ => return Err(err("expected `<id>,birth|death,<year>` or `flip,<source>,<target>`".into())),
        }
    }
    Ok(corrections)
}

/// Apply corrections in order; returns how many matched nothing.
pub fn apply_corrections(
    records: &mut [RawActorRecord],
    edges: &mut [InfluenceEdge],
    corrections: &[Correction],
) -> usize {
    let mut by_id: BTreeMap<String, usize> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_id.insert(r.id.clone(), i);
    }
    let mut unmatched = 0;
    for correction in corrections {
        match correction {
            Correction::SetBirth { id, year } => match by_id.get(id.as_str()) {
                Some(&i) => records[i].birth_year = Some(*year),
                None => unmatched += 1,
            },
            Correction::SetDeath { id, year } => match by_id.get(id.as_str()) {
                Some(&i) => records[i].death_year = Some(*year),
                None => unmatched += 1,
            },
            Correction::FlipEdge { source, target } => {
                let mut found = false;
                for edge in edges.iter_mut() {
                    if &edge.source == source && &edge.target == target {
                        std::mem::swap(&mut edge.source, &mut edge.target);
                        found = true;
                        break;
                    }
                }
                if !found {
                    unmatched += 1;
                }
            }
        }
    }
    unmatched
}

/// Assemble the network, erroring on edges that reference unknown scholars.
pub fn build_network(
    scheme: EraScheme,
    scholars: Vec<Scholar>,
    edges: Vec<InfluenceEdge>,
) -> Result<InfluenceNetwork> {
    let mut network = InfluenceNetwork::new(scheme);
    for scholar in scholars {
        network.insert_scholar(scholar);
    }
    for edge in edges {
        for endpoint in [&edge.source, &edge.target] {
            if network.scholar(endpoint).is_none() {
                return Err(Error::UnknownScholar(endpoint.clone()));
            }
        }
        network.insert_edge(edge.source, edge.target);
    }
    Ok(network)
}
