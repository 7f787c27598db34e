//! Internal indexed adjacency view used by the analysis passes.
//!
//! Ids are indexed in sorted order, so index comparisons agree with
//! lexicographic tie-breaking on ids, and neighbor lists come out sorted
//! because edge sets iterate in order.

use std::collections::{BTreeSet, HashMap};

/// Compact directed graph over string ids.
pub(crate) struct DiGraph {
    pub ids: Vec<String>,
    pub out: Vec<Vec<usize>>,
    pub incoming: Vec<Vec<usize>>,
    pub edge_count: usize,
}

impl DiGraph {
    pub fn new(nodes: &BTreeSet<String>, edges: &BTreeSet<(String, String)>) -> Self {
        let ids: Vec<String> = nodes.iter().cloned().collect();
        let index: HashMap<String, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut out = vec![Vec::new(); ids.len()];
        let mut incoming = vec![Vec::new(); ids.len()];
        let mut edge_count = 0;
        for (s, t) in edges {
            let (Some(&si), Some(&ti)) = (index.get(s), index.get(t)) else { continue };
            out[si].push(ti);
            incoming[ti].push(si);
            edge_count += 1;
        }
        for list in incoming.iter_mut() {
            list.sort_unstable();
        }
        DiGraph { ids, out, incoming, edge_count }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.out[from].binary_search(&to).is_ok()
    }

    /// Undirected simple projection as sorted, deduplicated neighbor lists.
    pub fn undirected(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for (u, outs) in self.out.iter().enumerate() {
            for &v in outs {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Weakly connected components as a label per node plus component count.
    pub fn weak_components(&self) -> (Vec<usize>, usize) {
        let adj = self.undirected();
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            stack.push(start);
            label[start] = count;
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// Strongly connected components via iterative Tarjan: a label per node
    /// plus component count. Iterative so deep chains at dataset scale do
    /// not overflow the stack.
    pub fn strong_components(&self) -> (Vec<usize>, usize) {
        let n = self.node_count();
        let mut labels = vec![usize::MAX; n];
        let mut comp_count = 0;

        let mut order = vec![usize::MAX; n]; // discovery index
        let mut low = vec![usize::MAX; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut next_index = 0usize;
        // Work stack frames: (node, next child position).
        let mut work: Vec<(usize, usize)> = Vec::new();

        for root in 0..n {
            if order[root] != usize::MAX {
                continue;
            }
            work.push((root, 0));
            while let Some(&mut (u, ref mut child)) = work.last_mut() {
                if *child == 0 {
                    order[u] = next_index;
                    low[u] = next_index;
                    next_index += 1;
                    stack.push(u);
                    on_stack[u] = true;
                }
                let mut recursed = false;
                while *child < self.out[u].len() {
                    let v = self.out[u][*child];
                    *child += 1;
                    if order[v] == usize::MAX {
                        work.push((v, 0));
                        recursed = true;
                        break;
                    } else if on_stack[v] {
                        low[u] = low[u].min(order[v]);
                    }
                }
                if recursed {
                    continue;
                }
                if low[u] == order[u] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        labels[w] = comp_count;
                        if w == u {
                            break;
                        }
                    }
                    comp_count += 1;
                }
                work.pop();
                if let Some(&mut (parent, _)) = work.last_mut() {
                    low[parent] = low[parent].min(low[u]);
                }
            }
        }
        (labels, comp_count)
    }

    /// Fraction of edges whose reverse edge also exists (0 on empty graphs).
    pub fn reciprocity(&self) -> f64 {
        if self.edge_count == 0 {
            return 0.0;
        }
        let mut reciprocated = 0usize;
        for (u, outs) in self.out.iter().enumerate() {
            for &v in outs {
                if self.has_edge(v, u) {
                    reciprocated += 1;
                }
            }
        }
        reciprocated as f64 / self.edge_count as f64
    }

    /// Global clustering coefficient of the undirected simple projection:
    /// closed triplets over connected triplets (0 when there are no triplets).
    pub fn transitivity(&self) -> f64 {
        let adj = self.undirected();
        let mut closed = 0u64;
        let mut triplets = 0u64;
        for neighbors in &adj {
            let d = neighbors.len() as u64;
            triplets += d * d.saturating_sub(1) / 2;
            for (i, &a) in neighbors.iter().enumerate() {
                for &b in &neighbors[i + 1..] {
                    if adj[a].binary_search(&b).is_ok() {
                        closed += 1;
                    }
                }
            }
        }
        if triplets == 0 {
            0.0
        } else {
            closed as f64 / triplets as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(nodes: &[&str], edges: &[(&str, &str)]) -> DiGraph {
        let nodes: BTreeSet<String> = nodes.iter().map(|s| s.to_string()).collect();
        let edges: BTreeSet<(String, String)> =
            edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        DiGraph::new(&nodes, &edges)
    }

    #[test]
    fn tarjan_finds_cycle_component() {
        let g = graph(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c"), ("c", "a"), ("c", "d")]);
        let (labels, count) = g.strong_components();
        assert_eq!(count, 2);
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[1], labels[2]);
        assert_ne!(labels[2], labels[3]);
    }

    #[test]
    fn weak_components_ignore_direction() {
        let g = graph(&["a", "b", "c", "d"], &[("a", "b"), ("d", "c")]);
        let (_, count) = g.weak_components();
        assert_eq!(count, 2);
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let nodes: Vec<String> = (0..50_000).map(|i| format!("n{i:06}")).collect();
        let node_refs: BTreeSet<String> = nodes.iter().cloned().collect();
        let edges: BTreeSet<(String, String)> =
            nodes.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        let g = DiGraph::new(&node_refs, &edges);
        let (_, scc) = g.strong_components();
        assert_eq!(scc, 50_000);
        let (_, wcc) = g.weak_components();
        assert_eq!(wcc, 1);
    }

    #[test]
    fn triangle_is_fully_transitive() {
        let g = graph(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "a")]);
        assert_eq!(g.transitivity(), 1.0);
        assert_eq!(g.reciprocity(), 0.0);
    }

    #[test]
    fn mutual_dyad_is_fully_reciprocal() {
        let g = graph(&["a", "b"], &[("a", "b"), ("b", "a")]);
        assert_eq!(g.reciprocity(), 1.0);
    }
}
