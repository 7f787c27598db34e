//! Seeded greedy modularity optimization over the undirected weighted
//! projection of an accumulated-era network.
//!
//! Local node moving applies only strictly positive modularity gains
//! (> 1e-9), then the graph aggregates by community and the process repeats,
//! so the modularity trajectory ascends monotonically. The only randomness
//! is the node visit order, drawn from a seeded generator: identical seed,
//! identical partition.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::community::CommunityPartition;
use crate::error::{Error, Result};
use crate::slicing::{PartialNetwork, SliceKind};

/// Minimum modularity gain for a local move to apply.
const GAIN_EPS: f64 = 1e-9;

/// Undirected weighted view with adjacency-matrix conventions: `adj[i]`
/// holds matrix entries `A_ij`; a self-loop's diagonal entry counts its
/// weight twice, so `k_i = sum_j A_ij` and `2m = sum_i k_i`.
struct LevelGraph {
    adj: Vec<BTreeMap<usize, f64>>,
    degree: Vec<f64>,
    two_m: f64,
}

impl LevelGraph {
    fn from_partial(pn: &PartialNetwork) -> (Vec<String>, Self) {
        let ids: Vec<String> = pn.nodes.iter().cloned().collect();
        let index: BTreeMap<&str, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); ids.len()];
        for (s, t) in &pn.edges {
            let (Some(&u), Some(&v)) = (index.get(s.as_str()), index.get(t.as_str())) else {
                continue;
            };
            if u == v {
                continue;
            }
            *adj[u].entry(v).or_insert(0.0) += 1.0;
            *adj[v].entry(u).or_insert(0.0) += 1.0;
        }
        let graph = LevelGraph::finish(adj);
        (ids, graph)
    }

    fn finish(adj: Vec<BTreeMap<usize, f64>>) -> Self {
        let degree: Vec<f64> = adj.iter().map(|row| row.values().sum()).collect();
        let two_m = degree.iter().sum();
        LevelGraph { adj, degree, two_m }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Collapse communities into super-nodes; `A'_CD = sum A_ij` over pairs.
    fn aggregate(&self, node_to_comm: &[usize], comm_count: usize) -> LevelGraph {
        let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); comm_count];
        for (u, row) in self.adj.iter().enumerate() {
            let cu = node_to_comm[u];
            for (&v, &w) in row {
                *adj[cu].entry(node_to_comm[v]).or_insert(0.0) += w;
            }
        }
        LevelGraph::finish(adj)
    }
}

/// One pass of local moving; returns the node-to-community map (dense ids)
/// and whether any node moved.
fn local_moving(graph: &LevelGraph, rng: &mut ChaCha8Rng) -> (Vec<usize>, usize, bool) {
    let n = graph.len();
    let mut community: Vec<usize> = (0..n).collect();
    // tot[c] = sum of degrees in c. in-weights are tracked implicitly via
    // neighbor sums; only tot is needed for the insertion score.
    let mut tot: Vec<f64> = graph.degree.clone();
    let mut moved_any = false;

    if graph.two_m > 0.0 {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        loop {
            let mut moved_this_sweep = false;
            for &node in &order {
                let k_i = graph.degree[node];
                if k_i == 0.0 {
                    continue;
                }
                let current = community[node];
                // Weight from `node` to each neighboring community.
                let mut weights: BTreeMap<usize, f64> = BTreeMap::new();
                for (&neighbor, &w) in &graph.adj[node] {
                    if neighbor != node {
                        *weights.entry(community[neighbor]).or_insert(0.0) += w;
                    }
                }
                tot[current] -= k_i;
                // Self-loop weight moves with the node and is constant across
                // candidates, so it drops out of the comparison.
                let score = |c: usize, w: f64| w - tot[c] * k_i / graph.two_m;
                let stay_score = score(current, weights.get(&current).copied().unwrap_or(0.0));
                let mut best = (current, stay_score);
                for (&c, &w) in &weights {
                    if c == current {
                        continue;
                    }
                    let s = score(c, w);
                    // Strict improvement keeps ties on the lowest community id
                    // thanks to the sorted candidate order.
                    if s > best.1 + GAIN_EPS {
                        best = (c, s);
                    }
                }
                tot[best.0] += k_i;
                if best.0 != current {
                    community[node] = best.0;
                    moved_this_sweep = true;
                    moved_any = true;
                }
            }
            if !moved_this_sweep {
                break;
            }
        }
    }

    // Dense relabel in ascending old-community order.
    let labels: std::collections::BTreeSet<usize> = community.iter().copied().collect();
    let relabel: BTreeMap<usize, usize> =
        labels.into_iter().enumerate().map(|(dense, old)| (old, dense)).collect();
    let count = relabel.len();
    for c in community.iter_mut() {
        *c = relabel[c];
    }
    (community, count, moved_any)
}

/// Modularity of a community map over a level graph.
fn modularity(graph: &LevelGraph, community: &[usize], comm_count: usize) -> f64 {
    if graph.two_m == 0.0 {
        return 0.0;
    }
    let mut internal = vec![0.0f64; comm_count];
    let mut tot = vec![0.0f64; comm_count];
    for (u, row) in graph.adj.iter().enumerate() {
        tot[community[u]] += graph.degree[u];
        for (&v, &w) in row {
            if community[u] == community[v] {
                internal[community[u]] += w;
            }
        }
    }
    (0..comm_count)
        .map(|c| internal[c] / graph.two_m - (tot[c] / graph.two_m).powi(2))
        .sum()
}

/// A detection run with its per-level modularity trajectory.
#[derive(Clone, Debug)]
pub struct LouvainRun {
    pub partition: CommunityPartition,
    /// Modularity after each level's local-moving phase; non-decreasing.
    pub pass_modularity: Vec<f64>,
    pub modularity: f64,
}

/// Detect communities on an accumulated-era slice; see
/// [`detect_communities_detailed`] for the modularity trajectory.
pub fn detect_communities(pn: &PartialNetwork, seed: u64) -> Result<CommunityPartition> {
    detect_communities_detailed(pn, seed).map(|run| run.partition)
}

/// Graphs up to this size run several restarts and keep the best partition;
/// greedy node moving on very small graphs is sensitive to the visit order.
const RESTART_CUTOFF: usize = 2048;
const RESTARTS: u64 = 10;

fn single_run(mut graph: LevelGraph, node_count: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<f64>) {
    // node_of[i]: current super-node of original node i.
    let mut node_of: Vec<usize> = (0..node_count).collect();
    let mut pass_modularity = Vec::new();
    let mut last_q = f64::NEG_INFINITY;
    loop {
        let (community, comm_count, moved) = local_moving(&graph, rng);
        let q = modularity(&graph, &community, comm_count);
        pass_modularity.push(q);
        for node in node_of.iter_mut() {
            *node = community[*node];
        }
        if !moved || q - last_q <= GAIN_EPS {
            break;
        }
        last_q = q;
        graph = graph.aggregate(&community, comm_count);
    }
    (node_of, pass_modularity)
}

/// Detect communities and report the modularity after every level.
///
/// Isolated nodes stay in singleton communities; an empty slice yields an
/// empty partition. Community ids in the result are dense, numbered by first
/// appearance over the node ids in sorted order.
pub fn detect_communities_detailed(pn: &PartialNetwork, seed: u64) -> Result<LouvainRun> {
    let SliceKind::Accumulated(step) = pn.kind else {
        return Err(Error::InvalidSlice(format!(
            "community detection runs on accumulated slices, got {}",
            pn.kind
        )));
    };

    let (ids, graph) = LevelGraph::from_partial(pn);
    let restarts = if ids.len() <= RESTART_CUTOFF { RESTARTS } else { 1 };
    let mut best: Option<(Vec<usize>, Vec<f64>)> = None;
    for restart in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart.wrapping_mul(0x9E3779B97F4A7C15)));
        let level = LevelGraph {
            adj: graph.adj.clone(),
            degree: graph.degree.clone(),
            two_m: graph.two_m,
        };
        let run = single_run(level, ids.len(), &mut rng);
        let q = run.1.last().copied().unwrap_or(0.0);
        let better = match &best {
            None => true,
            Some((_, trajectory)) => q > trajectory.last().copied().unwrap_or(0.0) + GAIN_EPS,
        };
        if better {
            best = Some(run);
        }
    }
    let (node_of, pass_modularity) = best.unwrap_or_else(|| ((0..ids.len()).collect(), Vec::new()));

    // Dense ids by first appearance over sorted original node ids.
    let mut dense: BTreeMap<usize, u32> = BTreeMap::new();
    let mut assignment = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        let next = dense.len() as u32;
        let community = *dense.entry(node_of[i]).or_insert(next);
        assignment.insert(id.clone(), community);
    }

    let modularity = pass_modularity.last().copied().unwrap_or(0.0);
    Ok(LouvainRun {
        partition: CommunityPartition { step, assignment },
        pass_modularity,
        modularity,
    })
}

/// Modularity of an arbitrary partition of a slice, on the same undirected
/// weighted projection the detector uses.
pub fn modularity_of(pn: &PartialNetwork, partition: &CommunityPartition) -> Result<f64> {
    let (ids, graph) = LevelGraph::from_partial(pn);
    let mut community = Vec::with_capacity(ids.len());
    for id in &ids {
        let c = partition
            .assignment
            .get(id)
            .ok_or_else(|| Error::UnknownScholar(id.clone()))?;
        community.push(*c as usize);
    }
    let comm_count = community.iter().map(|&c| c + 1).max().unwrap_or(0);
    Ok(modularity(&graph, &community, comm_count))
}
