//! Seeded dataset generators.
//!
//! Each generator draws from its own named stream, so a spec fully determines
//! the artifact.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::io::{parse_edge_list, write_edge_list, write_qaplib};
use crate::formulations::{QapInstance, WeightedGraph};
use crate::matrix::Matrix;
use crate::rng::stream;
use crate::warehouse::OrderSet;

pub const TINYQAP_SEED: u64 = 1234;
pub const SWEEP_NODES: usize = 145;
pub const PEGASUS_STEP: usize = 543;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    #[default]
    Unit,
    PlusMinusOne,
    /// Uniform on (0, 1].
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Skew {
    None,
    #[default]
    Pareto8020,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Chimera { m: usize, t: usize },
    HardwareSubgraph {
        source: PathBuf,
        n: usize,
        #[serde(default)]
        weight_mode: WeightMode,
    },
    Gnm { n: usize, m: usize },
    Tinyqap { n: usize },
    Orders { n_skus: usize, n_orders: usize, lines_per_order: usize, skew: Skew },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub family: Family,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Graph(WeightedGraph),
    Qap(QapInstance),
    Orders(OrderSet),
}

impl GeneratorSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        GeneratorSpec { family, seed }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn generate(&self) -> Result<Artifact> {
        Ok(match &self.family {
            Family::Chimera { m, t } => Artifact::Graph(gen_chimera(*m, *t)?),
            Family::HardwareSubgraph { source, n, weight_mode } => {
                let g = parse_edge_list(&std::fs::read_to_string(source)?)?;
                Artifact::Graph(subgraph_sample(&g, *n, self.seed, *weight_mode)?)
            }
            Family::Gnm { n, m } => Artifact::Graph(gnm_random_graph(*n, *m, self.seed)?),
            Family::Tinyqap { n } => Artifact::Qap(gen_tinyqap(*n, self.seed)?),
            Family::Orders { n_skus, n_orders, lines_per_order, skew } => {
                Artifact::Orders(gen_orders(*n_skus, *n_orders, *lines_per_order, *skew, self.seed)?)
            }
        })
    }

    /// Default file name for the artifact.
    pub fn file_name(&self) -> String {
        match &self.family {
            Family::Chimera { m, t } => format!("chimera_{m}_{t}.txt"),
            Family::HardwareSubgraph { n, .. } => format!("subgraph_{n}_s{}.txt", self.seed),
            Family::Gnm { n, m } => format!("gnm_{n}_{m}_s{}.txt", self.seed),
            Family::Tinyqap { n } => format!("tinyqap_{n}_s{}.dat", self.seed),
            Family::Orders { n_skus, n_orders, .. } => format!("orders_{n_skus}_{n_orders}_s{}.csv", self.seed),
        }
    }
}

impl Artifact {
    /// Text form with the spec embedded as a provenance comment.
    pub fn to_text(&self, spec: &GeneratorSpec) -> String {
        let header = vec![format!("spec: {}", spec.to_json())];
        match self {
            Artifact::Graph(g) => write_edge_list(g, &header),
            Artifact::Qap(q) => write_qaplib(q, &header),
            Artifact::Orders(o) => {
                let mut s = format!("# {}\n", header[0]);
                s.push_str(&o.to_csv());
                s
            }
        }
    }
}

/// m×m grid of K_{t,t} cells; node index ((r*m + c)*2 + side)*t + k.
pub fn gen_chimera(m: usize, t: usize) -> Result<WeightedGraph> {
    if m == 0 || t == 0 {
        return Err(Error::Parameter("chimera needs m >= 1 and t >= 1".into()));
    }
    let id = |r: usize, c: usize, side: usize, k: usize| ((r * m + c) * 2 + side) * t + k;
    let mut edges = Vec::new();
    for r in 0..m {
        for c in 0..m {
            for a in 0..t {
                for b in 0..t {
                    edges.push((id(r, c, 0, a), id(r, c, 1, b), 1.0));
                }
            }
            for k in 0..t {
                if r + 1 < m {
                    edges.push((id(r, c, 0, k), id(r + 1, c, 0, k), 1.0));
                }
                if c + 1 < m {
                    edges.push((id(r, c, 1, k), id(r, c + 1, 1, k), 1.0));
                }
            }
        }
    }
    Ok(WeightedGraph::new(2 * m * m * t, edges)?.sorted())
}

fn draw_weight(mode: WeightMode, rng: &mut impl Rng) -> f64 {
    match mode {
        WeightMode::Unit => 1.0,
        WeightMode::PlusMinusOne => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
        WeightMode::Uniform => 1.0 - rng.random::<f64>(),
    }
}

/// The sorted node ids `subgraph_sample` keeps for this seed.
pub fn subgraph_survivors(node_count: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut keep = index::sample(&mut stream(seed, "subgraph", 0), node_count, n).into_vec();
    keep.sort_unstable();
    keep
}

/// Induced subgraph on n uniformly chosen survivors, relabeled in original order.
pub fn subgraph_sample(g: &WeightedGraph, n: usize, seed: u64, mode: WeightMode) -> Result<WeightedGraph> {
    if n > g.node_count() {
        return Err(Error::Parameter(format!("cannot keep {n} of {} nodes", g.node_count())));
    }
    let keep = subgraph_survivors(g.node_count(), n, seed);
    let mut label = vec![usize::MAX; g.node_count()];
    for (new, &old) in keep.iter().enumerate() {
        label[old] = new;
    }
    let mut wrng = stream(seed, "subgraph-weights", 0);
    let edges = g
        .edges()
        .iter()
        .filter(|&&(u, v, _)| label[u] != usize::MAX && label[v] != usize::MAX)
        .map(|&(u, v, _)| (label[u], label[v], draw_weight(mode, &mut wrng)))
        .collect();
    WeightedGraph::new(n, edges)
}

/// Pegasus subgraph sizes: step, 2·step, ..., count·step.
pub fn size_ladder(step: usize, count: usize) -> Vec<usize> {
    (1..=count).map(|i| i * step).collect()
}

/// G(n, m): m distinct uniformly chosen edges, sorted.
pub fn gnm_random_graph(n: usize, m: usize, seed: u64) -> Result<WeightedGraph> {
    let total = n * n.saturating_sub(1) / 2;
    if m > total {
        return Err(Error::Parameter(format!("{m} edges exceed the {total} possible on {n} nodes")));
    }
    let mut rng = stream(seed, "gnm", 0);
    let mut picks = index::sample(&mut rng, total, m).into_vec();
    picks.sort_unstable();
    let mut edges = Vec::with_capacity(m);
    let (mut u, mut row_start) = (0usize, 0usize);
    for p in picks {
        while p >= row_start + (n - 1 - u) {
            row_start += n - 1 - u;
            u += 1;
        }
        edges.push((u, u + 1 + (p - row_start), 1.0));
    }
    WeightedGraph::new(n, edges)
}

/// The 32 average degrees of the connectivity sweep.
pub fn sweep_degrees() -> Vec<usize> {
    (1..=20).chain((30..=140).step_by(10)).collect()
}

pub fn sweep_edge_count(n: usize, degree: usize) -> usize {
    n * degree / 2
}

pub fn degree_sweep_specs(seed: u64) -> Vec<GeneratorSpec> {
    sweep_degrees()
        .into_iter()
        .map(|d| GeneratorSpec::new(Family::Gnm { n: SWEEP_NODES, m: sweep_edge_count(SWEEP_NODES, d) }, seed))
        .collect()
}

/// Random points in the unit square and a symmetric zero-diagonal flow.
pub fn gen_tinyqap(n: usize, seed: u64) -> Result<QapInstance> {
    if n < 1 {
        return Err(Error::Parameter("tinyqap needs n >= 1".into()));
    }
    let mut rng = stream(seed, "tinyqap", n as u64);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    let raw: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
    let flow = Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { (raw[i * n + j] + raw[j * n + i]) / 2.0 });
    let dist = Matrix::from_fn(n, n, |i, j| ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt());
    QapInstance::new(flow, dist)
}

/// Per-SKU draw weights: uniform, or 80% of the mass on a seeded top fifth.
pub fn sku_weights(n_skus: usize, skew: Skew, rng: &mut impl Rng) -> Vec<f64> {
    match skew {
        Skew::None => vec![1.0 / n_skus as f64; n_skus],
        Skew::Pareto8020 => {
            let top = ((n_skus as f64) * 0.2).round().max(1.0) as usize;
            let top = top.min(n_skus);
            let mut ids: Vec<usize> = (0..n_skus).collect();
            ids.shuffle(rng);
            let mut w = vec![0.0; n_skus];
            let rest = n_skus - top;
            let (top_mass, rest_mass) = if rest == 0 { (1.0, 0.0) } else { (0.8, 0.2) };
            for (rank, &s) in ids.iter().enumerate() {
                w[s] = if rank < top { top_mass / top as f64 } else { rest_mass / rest as f64 };
            }
            w
        }
    }
}

/// Orders of `lines_per_order` distinct SKUs drawn sequentially without replacement.
pub fn gen_orders(n_skus: usize, n_orders: usize, lines_per_order: usize, skew: Skew, seed: u64) -> Result<OrderSet> {
    if n_skus == 0 || lines_per_order == 0 || lines_per_order > n_skus {
        return Err(Error::Parameter(format!("cannot draw {lines_per_order} distinct SKUs from {n_skus}")));
    }
    let mut rng = stream(seed, "orders-popularity", 0);
    let w = sku_weights(n_skus, skew, &mut rng);
    let mut cum = Vec::with_capacity(n_skus);
    let mut acc = 0.0;
    for &x in &w {
        acc += x;
        cum.push(acc);
    }
    let mut rng = stream(seed, "orders", 0);
    let mut orders = Vec::with_capacity(n_orders);
    for _ in 0..n_orders {
        let mut order: Vec<usize> = Vec::with_capacity(lines_per_order);
        while order.len() < lines_per_order {
            let r = rng.random::<f64>() * acc;
            let s = cum.partition_point(|&c| c <= r).min(n_skus - 1);
            if !order.contains(&s) {
                order.push(s);
            }
        }
        orders.push(order);
    }
    OrderSet::new(n_skus, orders)
}

/// Specs for the TinyQAP ladder n = lo..=hi.
pub fn tinyqap_ladder(lo: usize, hi: usize, seed: u64) -> Vec<GeneratorSpec> {
    (lo..=hi).map(|n| GeneratorSpec::new(Family::Tinyqap { n }, seed)).collect()
}

/// Human summary line for logs.
pub fn describe(a: &Artifact) -> String {
    let mut s = String::new();
    match a {
        Artifact::Graph(g) => write!(s, "graph: {} nodes, {} edges", g.node_count(), g.edge_count()),
        Artifact::Qap(q) => write!(s, "qap: n={}", q.n()),
        Artifact::Orders(o) => write!(s, "orders: {} orders over {} skus", o.orders().len(), o.n_skus()),
    }
    .unwrap();
    s
}
