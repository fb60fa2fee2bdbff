use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph with nonzero finite edge weights, edges stored u < v.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    node_count: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    /// Validates and normalizes endpoint order. Edge order is preserved.
    pub fn new(node_count: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for (u, v, w) in edges {
            if u == v {
                return Err(Error::Domain(format!("self-loop at node {u}")));
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            if b >= node_count {
                return Err(Error::Domain(format!("edge ({u},{v}) exceeds node count {node_count}")));
            }
            if !w.is_finite() || w == 0.0 {
                return Err(Error::Domain(format!("edge ({u},{v}) has invalid weight {w}")));
            }
            if !seen.insert((a, b)) {
                return Err(Error::Domain(format!("duplicate edge ({a},{b})")));
            }
            out.push((a, b, w));
        }
        Ok(WeightedGraph { node_count, edges: out })
    }

    pub fn unweighted(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new(node_count, edges.iter().map(|&(u, v)| (u, v, 1.0)).collect())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.node_count];
        for &(u, v, _) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        self.edges.iter().any(|&(x, y, _)| x == a && y == b)
    }

    /// Same graph with every weight replaced by `f(index)`.
    pub fn reweighted(&self, mut f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new(self.node_count, self.edges.iter().enumerate().map(|(k, &(u, v, _))| (u, v, f(k))).collect())
    }

    /// Edges sorted by (u, v).
    pub fn sorted(mut self) -> Self {
        self.edges.sort_by_key(|a| (a.0, a.1));
        self
    }
}
