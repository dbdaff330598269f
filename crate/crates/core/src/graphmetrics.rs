//! Structural descriptors of a lexical network.
//!
//! Path-based metrics and PageRank are taken on the largest connected
//! component; degenerate components (at most one node) yield 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::IndexedGraph;
use crate::netbuild::LexicalNetwork;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("pagerank did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 1000,
        }
    }
}

/// Connected components as label lists, largest first.
pub fn components(g: &IndexedGraph) -> Vec<Vec<String>> {
    g.components()
        .into_iter()
        .map(|c| c.into_iter().map(|i| g.label(i).to_string()).collect())
        .collect()
}

pub fn density(g: &IndexedGraph) -> f64 {
    let n = g.len();
    if n < 2 {
        return 0.0;
    }
    2.0 * g.edge_count() as f64 / (n as f64 * (n as f64 - 1.0))
}

/// Local clustering of one node; `None` when its degree is below 2.
pub fn local_clustering(g: &IndexedGraph, node: usize) -> Option<f64> {
    let nb = g.neighbors(node);
    let k = nb.len();
    if k < 2 {
        return None;
    }
    let mut links = 0usize;
    for (i, &a) in nb.iter().enumerate() {
        for &b in &nb[i + 1..] {
            if g.has_edge(a, b) {
                links += 1;
            }
        }
    }
    Some(2.0 * links as f64 / (k * (k - 1)) as f64)
}

/// Mean local clustering over nodes of degree at least 2.
pub fn avg_local_clustering(g: &IndexedGraph) -> f64 {
    let values: Vec<f64> = (0..g.len()).filter_map(|v| local_clustering(g, v)).collect();
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Sum of ordered-pair distances and the eccentricity maximum over a
/// connected graph.
fn path_stats(lcc: &IndexedGraph) -> (u64, usize) {
    let mut total = 0u64;
    let mut diameter = 0usize;
    for s in 0..lcc.len() {
        for d in lcc.bfs_distances(s).into_iter().flatten() {
            total += d as u64;
            diameter = diameter.max(d);
        }
    }
    (total, diameter)
}

pub fn aspl_lcc(g: &IndexedGraph) -> f64 {
    let lcc = g.largest_component();
    let n = lcc.len();
    if n < 2 {
        return 0.0;
    }
    let (total, _) = path_stats(&lcc);
    total as f64 / (n * (n - 1)) as f64
}

pub fn diameter_lcc(g: &IndexedGraph) -> usize {
    let lcc = g.largest_component();
    if lcc.len() < 2 {
        return 0;
    }
    path_stats(&lcc).1
}

/// PageRank by power iteration with uniform teleport. Dangling nodes
/// redistribute uniformly. Stops once the L1 change drops below `tol`.
pub fn pagerank(g: &IndexedGraph, params: PageRankParams) -> Result<Vec<f64>, MetricsError> {
    let PageRankParams { damping, tol, max_iter } = params;
    if !(damping > 0.0 && damping < 1.0) {
        return Err(MetricsError::InvalidParameter(format!("damping must lie in (0,1), got {damping}")));
    }
    let n = g.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let uniform = 1.0 / n as f64;
    let mut rank = vec![uniform; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let dangling: f64 = (0..n).filter(|&v| g.degree(v) == 0).map(|v| rank[v]).sum();
        let base = (1.0 - damping) * uniform + damping * dangling * uniform;
        next.iter_mut().for_each(|x| *x = base);
        for (u, &r) in rank.iter().enumerate() {
            let k = g.degree(u);
            if k > 0 {
                let share = damping * r / k as f64;
                for &v in g.neighbors(u) {
                    next[v] += share;
                }
            }
        }
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual < tol {
            let total: f64 = rank.iter().sum();
            rank.iter_mut().for_each(|x| *x /= total);
            return Ok(rank);
        }
    }
    Err(MetricsError::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Mean absolute deviation of LCC PageRank from uniform, divided by the
/// LCC size.
pub fn pagerank_centralisation(g: &IndexedGraph, params: PageRankParams) -> Result<f64, MetricsError> {
    let lcc = g.largest_component();
    let n = lcc.len();
    if n < 2 {
        return Ok(0.0);
    }
    let u = 1.0 / n as f64;
    let s: f64 = pagerank(&lcc, params)?.iter().map(|r| (r - u).abs()).sum();
    Ok(s / n as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StructuralFeatures {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub density: f64,
    pub avg_local_clustering: f64,
    pub aspl_lcc: f64,
    pub diameter_lcc: usize,
    pub pagerank_centralisation: f64,
    pub n_components: usize,
}

impl StructuralFeatures {
    /// Names of the seven model-facing descriptors, in [`Self::values`] order.
    pub const NAMES: [&'static str; 7] = [
        "n_nodes",
        "n_edges",
        "density",
        "avg_local_clustering",
        "aspl_lcc",
        "diameter_lcc",
        "pagerank_centralisation",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.n_nodes as f64,
            self.n_edges as f64,
            self.density,
            self.avg_local_clustering,
            self.aspl_lcc,
            self.diameter_lcc as f64,
            self.pagerank_centralisation,
        ]
    }
}

pub fn graph_features(g: &IndexedGraph, params: PageRankParams) -> Result<StructuralFeatures, MetricsError> {
    let lcc = g.largest_component();
    let (aspl, diameter) = if lcc.len() < 2 {
        (0.0, 0)
    } else {
        let (total, d) = path_stats(&lcc);
        (total as f64 / (lcc.len() * (lcc.len() - 1)) as f64, d)
    };
    Ok(StructuralFeatures {
        n_nodes: g.len(),
        n_edges: g.edge_count(),
        density: density(g),
        avg_local_clustering: avg_local_clustering(g),
        aspl_lcc: aspl,
        diameter_lcc: diameter,
        pagerank_centralisation: pagerank_centralisation(g, params)?,
        n_components: g.components().len(),
    })
}

pub fn structural_features(net: &LexicalNetwork) -> Result<StructuralFeatures, MetricsError> {
    graph_features(&net.to_indexed(), PageRankParams::default())
}

/// Equal-width histogram for plotting distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    let bins = bins.max(1);
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Histogram {
            edges: vec![0.0; bins + 1],
            counts: vec![0; bins],
        };
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0; bins];
    for v in finite {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Histogram { edges, counts }
}
