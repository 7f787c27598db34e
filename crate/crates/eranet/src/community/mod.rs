//! Community detection on accumulated-era networks, longitudinal diversity
//! scoring, and dynamic community tracking across era steps.

mod louvain;
mod tracking;

pub use louvain::{detect_communities, detect_communities_detailed, modularity_of, LouvainRun};
pub use tracking::{
    era_presence_patterns, sweep_csv, theta_sweep, track, DynamicCommunity, EventKind,
    PresencePattern, StatsSummary, SweepRow, TrackingConfig, TrackingEvent, TrackingResult,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::slicing::PartialNetwork;

/// Communities are "large" from this size on.
pub const LARGE_COMMUNITY_MIN: usize = 10;

/// A node-to-community assignment for one era step. Community ids are dense
/// integers starting at zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommunityPartition {
    pub step: usize,
    pub assignment: BTreeMap<String, u32>,
}

impl CommunityPartition {
    pub fn community_count(&self) -> usize {
        self.assignment.values().map(|&c| c as usize + 1).max().unwrap_or(0)
    }

    /// Members of each community, keyed by community id.
    pub fn members(&self) -> BTreeMap<u32, BTreeSet<String>> {
        let mut members: BTreeMap<u32, BTreeSet<String>> = BTreeMap::new();
        for (node, &community) in &self.assignment {
            members.entry(community).or_default().insert(node.clone());
        }
        members
    }

    /// CSV export: `node_id,community_id`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,community_id\n");
        for (node, community) in &self.assignment {
            out.push_str(&format!("{node},{community}\n"));
        }
        out
    }
}

/// Jaccard similarity of two sets: intersection size over union size.
/// Undefined (an error) when both sets are empty.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::EmptyInput("jaccard"));
    }
    let intersection = a.intersection(b).count();
    let union = a.len() + b.len() - intersection;
    Ok(intersection as f64 / union as f64)
}

/// Normalized Shannon entropy of a community's era composition, in [0, 1].
///
/// With `p_i` the fraction of members from era `i`, the index is
/// `(-sum p_i log2 p_i) / log2 K`: zero when all members share one era, one
/// when all `K` eras contribute equally.
pub fn diversity(member_eras: &[usize], era_count: usize) -> Result<f64> {
    if member_eras.is_empty() {
        return Err(Error::EmptyInput("diversity"));
    }
    let mut counts = vec![0usize; era_count];
    for &era in member_eras {
        if era >= era_count {
            return Err(Error::Internal(format!("era {era} out of range for K={era_count}")));
        }
        counts[era] += 1;
    }
    let total = member_eras.len() as f64;
    let mut entropy = 0.0;
    for &count in &counts {
        if count > 0 {
            let p = count as f64 / total;
            entropy -= p * p.log2();
        }
    }
    Ok(entropy / (era_count as f64).log2())
}

/// Five-number-plus summary of community sizes.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MemberSummary {
    pub mean: f64,
    /// Sample standard deviation (0 for fewer than two communities).
    pub std: f64,
    pub min: usize,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: usize,
}

/// Linear-interpolation percentile of a sorted sample, `p` in [0, 1].
pub(crate) fn percentile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let rank = p * (n as f64 - 1.0);
            let lo = rank.floor() as usize;
            let frac = rank - lo as f64;
            if lo + 1 < n {
                sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
            } else {
                sorted[n - 1]
            }
        }
    }
}

pub(crate) fn summarize_sizes(sizes: &[usize]) -> MemberSummary {
    if sizes.is_empty() {
        return MemberSummary::default();
    }
    let n = sizes.len() as f64;
    let mean = sizes.iter().sum::<usize>() as f64 / n;
    let std = if sizes.len() > 1 {
        (sizes.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    sorted.sort_by(f64::total_cmp);
    MemberSummary {
        mean,
        std,
        min: *sizes.iter().min().unwrap(),
        q25: percentile(&sorted, 0.25),
        median: percentile(&sorted, 0.5),
        q75: percentile(&sorted, 0.75),
        max: *sizes.iter().max().unwrap(),
    }
}

/// Node and edge counts of one of the largest communities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CommunitySummary {
    pub community_id: u32,
    pub nodes: usize,
    pub edges: usize,
}

/// Counts and size statistics of a detected partition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommunityStats {
    /// Total number of communities C.
    pub community_count: usize,
    /// Number of large communities LC (size >= 10).
    pub large_count: usize,
    /// The three largest communities with node and edge counts.
    pub top3: Vec<CommunitySummary>,
    pub member_summary: MemberSummary,
}

/// Aggregate a partition: counts, large communities, the top-3 largest with
/// their edge counts, and a member-count summary.
pub fn community_stats(partition: &CommunityPartition, pn: &PartialNetwork) -> CommunityStats {
    let members = partition.members();
    let sizes: Vec<usize> = members.values().map(BTreeSet::len).collect();

    let mut edge_counts: BTreeMap<u32, usize> = BTreeMap::new();
    for (s, t) in &pn.edges {
        if let (Some(&cs), Some(&ct)) = (partition.assignment.get(s), partition.assignment.get(t)) {
            if cs == ct {
                *edge_counts.entry(cs).or_insert(0) += 1;
            }
        }
    }

    let mut ranked: Vec<(&u32, &BTreeSet<String>)> = members.iter().collect();
    ranked.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then_with(|| a.0.cmp(b.0)));
    let top3 = ranked
        .iter()
        .take(3)
        .map(|(&id, m)| CommunitySummary {
            community_id: id,
            nodes: m.len(),
            edges: edge_counts.get(&id).copied().unwrap_or(0),
        })
        .collect();

    CommunityStats {
        community_count: members.len(),
        large_count: sizes.iter().filter(|&&s| s >= LARGE_COMMUNITY_MIN).count(),
        top3,
        member_summary: summarize_sizes(&sizes),
    }
}
