//! Era assignment and repair of era-reversal anomalies.
//!
//! Every scholar gets exactly one era: the era containing the midpoint of
//! their lifespan with the first 20 years of age ignored. The initial
//! assignment can leave *reverse links* (an influence edge whose source sits
//! in a later era than its target), typically when the influencer outlived
//! the influenced by a lot. [`repair_assignments`] removes them by
//! iteratively moving one endpoint of an offending edge — the influencer
//! backward to the influenced's era, or the influenced forward to the
//! influencer's era — until no reverse link remains.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EraScheme, InfluenceNetwork, Scholar};

/// Years of age ignored at the start of a lifespan when locating the
/// activity midpoint.
pub const DEFAULT_ACTIVITY_OFFSET: i32 = 20;

/// Midpoint of the scholar's active years: `floor((birth + offset + death)/2)`,
/// falling back to the plain lifespan midpoint when the lifespan is shorter
/// than the offset.
pub fn activity_midpoint(scholar: &Scholar, activity_offset: i32) -> i32 {
    let mut start = scholar.birth_year + activity_offset;
    if start >= scholar.death_year {
        start = scholar.birth_year;
    }
    // div_euclid keeps the floor semantics for BC (negative) years.
    (start + scholar.death_year).div_euclid(2)
}

/// Era containing the scholar's activity midpoint.
pub fn assign_initial_era(
    scholar: &Scholar,
    scheme: &EraScheme,
    activity_offset: i32,
) -> Result<usize> {
    scheme.era_of_year(activity_midpoint(scholar, activity_offset))
}

/// Assign every scholar in place. Purely lifespan-based, so the result is
/// independent of the edge set.
pub fn assign_all(network: &mut InfluenceNetwork, activity_offset: i32) -> Result<()> {
    let scheme = network.era_scheme().clone();
    let assignments: Result<Vec<(String, usize)>> = network
        .scholars()
        .map(|s| assign_initial_era(s, &scheme, activity_offset).map(|e| (s.id.clone(), e)))
        .collect();
    for (id, era) in assignments? {
        network.set_era_index(&id, Some(era))?;
    }
    Ok(())
}

/// An edge whose source era is later than its target era.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReverseLink {
    pub source: String,
    pub target: String,
    pub source_era: usize,
    pub target_era: usize,
}

impl ReverseLink {
    pub fn gap(&self) -> usize {
        self.source_era - self.target_era
    }
}

/// All reverse links, sorted by era gap descending, then by
/// `(source, target)` lexicographically. Errors when a scholar on an edge
/// has no era assignment.
pub fn find_reverse_links(network: &InfluenceNetwork) -> Result<Vec<ReverseLink>> {
    let mut links = Vec::new();
    for (source, target) in network.edges() {
        let source_era = network.era_of(source)?;
        let target_era = network.era_of(target)?;
        if source_era > target_era {
            links.push(ReverseLink {
                source: source.to_owned(),
                target: target.to_owned(),
                source_era,
                target_era,
            });
        }
    }
    links.sort_by(|a, b| {
        b.gap()
            .cmp(&a.gap())
            .then_with(|| a.source.cmp(&b.source))
            .then_with(|| a.target.cmp(&b.target))
    });
    Ok(links)
}

/// How the repair loop picks which endpoint of an offending edge to move.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairPolicy {
    /// Move the endpoint whose lifespan midpoint lies closest (in years) to
    /// the destination era's interval; ties move the influencer backward.
    /// A node that has moved backward once never moves forward again, which
    /// keeps every node's era trajectory monotone after its first backward
    /// move and guarantees termination.
    #[default]
    MinimalDisplacement,
    /// Always move the influencer backward to the era of the influenced.
    InfluencerBackward,
    /// Always move the influenced forward to the era of the influencer.
    InfluencedForward,
}

/// Direction of a single re-assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveDirection {
    Backward,
    Forward,
}

/// One re-assignment applied by the repair loop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Move {
    pub id: String,
    pub from_era: usize,
    pub to_era: usize,
    pub direction: MoveDirection,
    /// The offending edge that triggered the move.
    pub edge: (String, String),
}

/// Per-scholar repair record: initial and final era plus every move.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScholarTrace {
    pub id: String,
    pub initial_era: usize,
    pub final_era: usize,
    pub directions: Vec<MoveDirection>,
}

/// Full account of a repair run: global move order and per-scholar records.
#[derive(Clone, Debug, Default)]
pub struct AssignmentTrace {
    pub policy: Option<RepairPolicy>,
    pub moves: Vec<Move>,
    pub records: BTreeMap<String, ScholarTrace>,
}

impl AssignmentTrace {
    /// CSV export: `id,initial_era,final_era,n_moves`, one row per scholar
    /// that holds an assignment (moved or not).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,initial_era,final_era,n_moves\n");
        for record in self.records.values() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                record.id,
                record.initial_era,
                record.final_era,
                record.directions.len()
            ));
        }
        out
    }
}

/// Distance in years from a midpoint to an era's interval; zero when the
/// midpoint already lies inside it.
fn displacement(scheme: &EraScheme, midpoint: i32, era: usize) -> i64 {
    let (lo, hi) = scheme.bounds(era);
    if midpoint <= lo {
        (lo as i64) + 1 - midpoint as i64
    } else if midpoint > hi {
        midpoint as i64 - hi as i64
    } else {
        0
    }
}

/// Repair all reverse links by iterative re-assignment.
///
/// The most-reversed edge (largest era gap, ties broken lexicographically by
/// `(source, target)`) is processed first; the chosen endpoint jumps to the
/// other endpoint's era, and the loop re-examines the network until a
/// fixpoint with zero reverse links is reached. The loop is bounded by
/// `|E| * |eras|` moves and errors if the bound is exceeded.
pub fn repair_assignments(
    network: &InfluenceNetwork,
    policy: RepairPolicy,
) -> Result<(InfluenceNetwork, AssignmentTrace)> {
    repair_assignments_with_offset(network, policy, DEFAULT_ACTIVITY_OFFSET)
}

/// [`repair_assignments`] with an explicit activity offset, so displacement
/// comparisons use the same midpoints as the initial assignment.
pub fn repair_assignments_with_offset(
    network: &InfluenceNetwork,
    policy: RepairPolicy,
    activity_offset: i32,
) -> Result<(InfluenceNetwork, AssignmentTrace)> {
    let scheme = network.era_scheme().clone();
    let era_count = scheme.len();

    // Index ids in sorted order so index comparisons match lexicographic
    // tie-breaking on ids.
    let ids: Vec<String> = network.scholars().map(|s| s.id.clone()).collect();
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut eras: Vec<usize> = Vec::with_capacity(ids.len());
    let mut midpoints: Vec<i32> = Vec::with_capacity(ids.len());
    for scholar in network.scholars() {
        eras.push(scholar.era_index.ok_or_else(|| Error::MissingEra(scholar.id.clone()))?);
        midpoints.push(activity_midpoint(scholar, activity_offset));
    }

    let edges: Vec<(usize, usize)> = network
        .edges()
        .map(|(s, t)| (index[s], index[t]))
        .collect();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
    for (edge_idx, &(s, t)) in edges.iter().enumerate() {
        incident[s].push(edge_idx);
        incident[t].push(edge_idx);
    }

    // Violations keyed by (-gap, source, target): the first element is the
    // most-reversed edge with the lexicographically smallest endpoints.
    let violation_key = |edge_idx: usize, eras: &[usize]| -> Option<(i64, usize, usize)> {
        let (s, t) = edges[edge_idx];
        (eras[s] > eras[t]).then(|| (-((eras[s] - eras[t]) as i64), s, t))
    };
    let mut violations: std::collections::BTreeSet<(i64, usize, usize)> = edges
        .iter()
        .enumerate()
        .filter_map(|(i, _)| violation_key(i, &eras))
        .collect();
    let mut edge_of = BTreeMap::new();
    for (i, &(s, t)) in edges.iter().enumerate() {
        edge_of.insert((s, t), i);
    }

    let mut moved_backward = vec![false; ids.len()];
    let mut trace = AssignmentTrace { policy: Some(policy), ..AssignmentTrace::default() };
    for (i, id) in ids.iter().enumerate() {
        trace.records.insert(
            id.clone(),
            ScholarTrace { id: id.clone(), initial_era: eras[i], final_era: eras[i], directions: Vec::new() },
        );
    }

    let bound = edges.len() * era_count;
    while let Some(&(neg_gap, s, t)) = violations.iter().next() {
        if trace.moves.len() >= bound {
            return Err(Error::NonConvergence(bound));
        }
        let _ = neg_gap;
        let (node, to_era, direction) = match policy {
            RepairPolicy::InfluencerBackward => (s, eras[t], MoveDirection::Backward),
            RepairPolicy::InfluencedForward => (t, eras[s], MoveDirection::Forward),
            RepairPolicy::MinimalDisplacement => {
                let backward = (s, eras[t], MoveDirection::Backward);
                if moved_backward[t] {
                    backward
                } else {
                    let d_source = displacement(&scheme, midpoints[s], eras[t]);
                    let d_target = displacement(&scheme, midpoints[t], eras[s]);
                    if d_source <= d_target {
                        backward
                    } else {
                        (t, eras[s], MoveDirection::Forward)
                    }
                }
            }
        };
        if direction == MoveDirection::Backward {
            moved_backward[node] = true;
        }

        // Re-key every violation incident to the moving node.
        for &edge_idx in &incident[node] {
            if let Some(key) = violation_key(edge_idx, &eras) {
                violations.remove(&key);
            }
        }
        let from_era = eras[node];
        eras[node] = to_era;
        for &edge_idx in &incident[node] {
            if let Some(key) = violation_key(edge_idx, &eras) {
                violations.insert(key);
            }
        }

        trace.moves.push(Move {
            id: ids[node].clone(),
            from_era,
            to_era,
            direction,
            edge: (ids[s].clone(), ids[t].clone()),
        });
        let record = trace.records.get_mut(&ids[node]).expect("record exists");
        record.final_era = to_era;
        record.directions.push(direction);
    }

    let mut repaired = network.clone();
    for (i, id) in ids.iter().enumerate() {
        repaired.set_era_index(id, Some(eras[i]))?;
    }
    debug_assert!(find_reverse_links(&repaired)?.is_empty());
    Ok((repaired, trace))
}
