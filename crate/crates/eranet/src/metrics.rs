//! Structural metric battery for partial networks.
//!
//! Within-era and accumulated-era slices get the unipartite battery (sizes,
//! density, degrees, connectivity, reciprocity, transitivity); inter-era
//! slices are read as bipartite graphs between their source and target eras.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DiGraph;
use crate::slicing::{PartialNetwork, SliceKind};

/// Metric battery of a within-era or accumulated-era slice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnipartiteMetrics {
    pub n: usize,
    pub e: usize,
    /// N/A for within-era slices when the era population A is supplied.
    pub participation_ratio: Option<f64>,
    pub density: f64,
    /// False when N < 2 makes density undefined (reported as 0).
    pub density_defined: bool,
    pub avg_out_degree: f64,
    pub max_in_degree: usize,
    pub max_out_degree: usize,
    pub max_total_degree: usize,
    pub wcc_count: usize,
    pub largest_wcc_size: usize,
    pub largest_wcc_fraction: f64,
    /// Strong components with more than one node.
    pub scc_count: usize,
    pub reciprocity: f64,
    pub transitivity: f64,
}

/// Metric battery of an inter-era slice, read as a bipartite graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BipartiteMetrics {
    pub n: usize,
    pub e: usize,
    /// Sources with at least one outgoing edge in the slice.
    pub n_s: usize,
    /// Targets with at least one incoming edge in the slice.
    pub n_t: usize,
    pub density: f64,
    pub avg_in_degree: f64,
    pub max_in_degree: usize,
    pub avg_out_degree: f64,
    pub max_out_degree: usize,
    /// True when the slice carries no edges; all metrics are zero then.
    pub empty: bool,
}

/// Compute the unipartite battery. Inter slices are rejected.
pub fn unipartite_metrics(
    pn: &PartialNetwork,
    era_population: Option<usize>,
) -> Result<UnipartiteMetrics> {
    if matches!(pn.kind, SliceKind::Inter(..)) {
        return Err(Error::InvalidSlice(format!(
            "unipartite metrics need a within or accumulated slice, got {}",
            pn.kind
        )));
    }
    let g = DiGraph::new(&pn.nodes, &pn.edges);
    let n = g.node_count();
    let e = g.edge_count;

    let density_defined = n >= 2;
    let density = if density_defined {
        e as f64 / (n as f64 * (n as f64 - 1.0))
    } else {
        0.0
    };
    let avg_out_degree = if n == 0 { 0.0 } else { e as f64 / n as f64 };

    let max_in_degree = g.incoming.iter().map(Vec::len).max().unwrap_or(0);
    let max_out_degree = g.out.iter().map(Vec::len).max().unwrap_or(0);
    let max_total_degree = (0..n).map(|i| g.incoming[i].len() + g.out[i].len()).max().unwrap_or(0);

    let (wcc_labels, wcc_count) = g.weak_components();
    let mut wcc_sizes = vec![0usize; wcc_count];
    for &label in &wcc_labels {
        wcc_sizes[label] += 1;
    }
    let largest_wcc_size = wcc_sizes.iter().copied().max().unwrap_or(0);
    let largest_wcc_fraction = if n == 0 { 0.0 } else { largest_wcc_size as f64 / n as f64 };

    let (scc_labels, scc_total) = g.strong_components();
    let mut scc_sizes = vec![0usize; scc_total];
    for &label in &scc_labels {
        scc_sizes[label] += 1;
    }
    let scc_count = scc_sizes.iter().filter(|&&size| size > 1).count();

    let participation_ratio = match (pn.kind, era_population) {
        (SliceKind::Within(_), Some(population)) if population > 0 => {
            Some(n as f64 / population as f64)
        }
        _ => None,
    };

    Ok(UnipartiteMetrics {
        n,
        e,
        participation_ratio,
        density,
        density_defined,
        avg_out_degree,
        max_in_degree,
        max_out_degree,
        max_total_degree,
        wcc_count,
        largest_wcc_size,
        largest_wcc_fraction,
        scc_count,
        reciprocity: g.reciprocity(),
        transitivity: g.transitivity(),
    })
}

/// Compute the bipartite battery of an inter-era slice. Degree averages run
/// over participating nodes only, matching how N_s and N_t are defined.
pub fn bipartite_metrics(pn: &PartialNetwork) -> Result<BipartiteMetrics> {
    if !matches!(pn.kind, SliceKind::Inter(..)) {
        return Err(Error::InvalidSlice(format!(
            "bipartite metrics need an inter slice, got {}",
            pn.kind
        )));
    }
    let g = DiGraph::new(&pn.nodes, &pn.edges);
    let e = g.edge_count;
    let n_s = pn.sources.len();
    let n_t = pn.targets.len();
    if e == 0 {
        return Ok(BipartiteMetrics {
            n: 0,
            e: 0,
            n_s: 0,
            n_t: 0,
            density: 0.0,
            avg_in_degree: 0.0,
            max_in_degree: 0,
            avg_out_degree: 0.0,
            max_out_degree: 0,
            empty: true,
        });
    }
    Ok(BipartiteMetrics {
        n: n_s + n_t,
        e,
        n_s,
        n_t,
        density: e as f64 / (n_s as f64 * n_t as f64),
        avg_in_degree: e as f64 / n_t as f64,
        max_in_degree: g.incoming.iter().map(Vec::len).max().unwrap_or(0),
        avg_out_degree: e as f64 / n_s as f64,
        max_out_degree: g.out.iter().map(Vec::len).max().unwrap_or(0),
        empty: false,
    })
}

/// Which degree a ranking runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeDirection {
    In,
    Out,
    Total,
}

impl std::str::FromStr for DegreeDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "in" => Ok(DegreeDirection::In),
            "out" => Ok(DegreeDirection::Out),
            "total" => Ok(DegreeDirection::Total),
            other => Err(Error::Config(format!("unknown degree direction `{other}`"))),
        }
    }
}

/// Top-k scholars of a slice by degree, descending; ties break
/// lexicographically by id. Returns at most `min(k, N)` entries.
pub fn top_k_by_degree(
    pn: &PartialNetwork,
    direction: DegreeDirection,
    k: usize,
) -> Vec<(String, usize)> {
    let g = DiGraph::new(&pn.nodes, &pn.edges);
    let mut ranked: Vec<(String, usize)> = (0..g.node_count())
        .map(|i| {
            let degree = match direction {
                DegreeDirection::In => g.incoming[i].len(),
                DegreeDirection::Out => g.out[i].len(),
                DegreeDirection::Total => g.incoming[i].len() + g.out[i].len(),
            };
            (g.ids[i].clone(), degree)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}
