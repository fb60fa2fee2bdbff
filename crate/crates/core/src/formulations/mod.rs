//! Max-cut, minimum vertex cover and QAP as QUBO problems.

mod graph;
pub mod io;
mod qap;

use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use graph::WeightedGraph;
pub use qap::{
    a_to_q, auto_qap_penalty, constraint_rows, decode_permutation, encode_permutation, find_index, is_permutation,
    prepare_matrix_a, prepare_vector_b, qap_objective_qubo, qap_qubo, qap_violations, ConstraintSystem, QapInstance,
};

use crate::error::{Error, Result};
use crate::qubo::{BinarySample, QuboBuilder, QuboMatrix, SampleSet, Sense};

/// Penalty weight: a fixed value or the formulation's automatic rule.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Penalty {
    #[default]
    Auto,
    Value(f64),
}

impl Serialize for Penalty {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Penalty::Auto => s.serialize_str("auto"),
            Penalty::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Penalty {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Penalty::Value(v)),
            Raw::Text(t) if t == "auto" => Ok(Penalty::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("penalty must be a number or \"auto\", got {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Maxcut,
    Mvc,
    Qap,
    /// A bare QUBO with no source problem; every configuration is feasible.
    Raw,
}

#[derive(Debug, Clone)]
pub enum Decoder {
    Graph(Arc<WeightedGraph>),
    Qap(Arc<QapInstance>),
    None,
}

/// A QUBO bound to the source problem that produced it.
#[derive(Debug, Clone)]
pub struct QuboProblem {
    pub qubo: QuboMatrix,
    pub kind: ProblemKind,
    pub sense: Sense,
    pub decoder: Decoder,
    /// Penalty weight used (alpha for MVC, P for QAP), if any.
    pub penalty: Option<f64>,
}

impl QuboProblem {
    pub fn raw(qubo: QuboMatrix) -> Self {
        QuboProblem { qubo, kind: ProblemKind::Raw, sense: Sense::Min, decoder: Decoder::None, penalty: None }
    }

    pub fn n(&self) -> usize {
        self.qubo.n()
    }

    pub fn total_constraints(&self) -> usize {
        match (&self.kind, &self.decoder) {
            (ProblemKind::Mvc, Decoder::Graph(g)) => g.edge_count(),
            (ProblemKind::Qap, Decoder::Qap(q)) => 2 * q.n(),
            _ => 0,
        }
    }

    /// Violated source constraints; computed from decoder metadata only.
    pub fn violations(&self, x: &[u8]) -> Result<usize> {
        match (&self.kind, &self.decoder) {
            (ProblemKind::Mvc, Decoder::Graph(g)) => mvc_violations(g, x),
            (ProblemKind::Qap, Decoder::Qap(q)) => qap_violations(q.n(), x),
            _ => {
                if x.len() != self.n() {
                    return Err(Error::Dimension { expected: self.n(), got: x.len() });
                }
                Ok(0)
            }
        }
    }

    pub fn feasible(&self, x: &[u8]) -> Result<bool> {
        Ok(self.violations(x)? == 0)
    }

    /// Value in the source problem's own terms (cut value for max-cut).
    pub fn reported_energy(&self, qubo_energy: f64) -> f64 {
        match self.sense {
            Sense::Min => qubo_energy,
            Sense::Max => -qubo_energy,
        }
    }

    pub fn make_sample(&self, bits: Vec<u8>) -> Result<BinarySample> {
        let energy = self.qubo.energy(&bits)?;
        let violations = self.violations(&bits)?;
        Ok(BinarySample { bits, energy, feasible: violations == 0, violations })
    }

    pub fn sample_set(&self, bits: Vec<Vec<u8>>, label: impl Into<String>) -> Result<SampleSet> {
        let samples = bits.into_iter().map(|b| self.make_sample(b)).collect::<Result<Vec<_>>>()?;
        SampleSet::new(samples, label, self.total_constraints(), self.sense)
    }

    pub fn qap_instance(&self) -> Option<&QapInstance> {
        match &self.decoder {
            Decoder::Qap(q) => Some(q),
            _ => None,
        }
    }

    pub fn graph(&self) -> Option<&WeightedGraph> {
        match &self.decoder {
            Decoder::Graph(g) => Some(g),
            _ => None,
        }
    }
}

/// Minimization QUBO whose energy is the negated cut weight.
pub fn maxcut_to_qubo(g: &WeightedGraph) -> QuboProblem {
    let mut b = QuboBuilder::new(g.node_count());
    for &(u, v, w) in g.edges() {
        b.add(u, u, -w).add(v, v, -w).add(u, v, 2.0 * w);
    }
    QuboProblem {
        qubo: b.build(),
        kind: ProblemKind::Maxcut,
        sense: Sense::Max,
        decoder: Decoder::Graph(Arc::new(g.clone())),
        penalty: None,
    }
}

pub fn cut_value(g: &WeightedGraph, x: &[u8]) -> f64 {
    g.edges().iter().filter(|&&(u, v, _)| x[u] != x[v]).map(|e| e.2).sum()
}

/// MVC penalty resolved from `Penalty`; auto is the maximum degree, raised to 2 when smaller.
pub fn mvc_alpha(g: &WeightedGraph, alpha: Penalty) -> f64 {
    match alpha {
        Penalty::Auto => g.max_degree().max(2) as f64,
        Penalty::Value(a) => a,
    }
}

/// sum_i x_i + alpha * sum_E (1 - x_i - x_j + x_i x_j). Edge weights are ignored.
pub fn mvc_to_qubo(g: &WeightedGraph, alpha: Penalty) -> Result<QuboProblem> {
    let a = mvc_alpha(g, alpha);
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::Parameter(format!("MVC penalty must exceed 1, got {a}")));
    }
    let mut b = QuboBuilder::new(g.node_count());
    for i in 0..g.node_count() {
        b.add(i, i, 1.0);
    }
    for &(u, v, _) in g.edges() {
        b.add_offset(a).add(u, u, -a).add(v, v, -a).add(u, v, a);
    }
    Ok(QuboProblem {
        qubo: b.build(),
        kind: ProblemKind::Mvc,
        sense: Sense::Min,
        decoder: Decoder::Graph(Arc::new(g.clone())),
        penalty: Some(a),
    })
}

/// Edges with both endpoints unset.
pub fn mvc_violations(g: &WeightedGraph, x: &[u8]) -> Result<usize> {
    if x.len() != g.node_count() {
        return Err(Error::Dimension { expected: g.node_count(), got: x.len() });
    }
    Ok(g.edges().iter().filter(|&&(u, v, _)| x[u] == 0 && x[v] == 0).count())
}

/// (cover size, active penalty) for an MVC configuration.
pub fn mvc_energy_split(g: &WeightedGraph, alpha: f64, x: &[u8]) -> Result<(f64, f64)> {
    let violated = mvc_violations(g, x)?;
    let size = x.iter().filter(|&&b| b == 1).count();
    Ok((size as f64, alpha * violated as f64))
}

/// QAP objective plus one-hot penalty; feasible samples evaluate to the raw objective.
pub fn qap_to_qubo(inst: &QapInstance, penalty: Penalty) -> Result<QuboProblem> {
    let p = match penalty {
        Penalty::Auto => auto_qap_penalty(inst),
        Penalty::Value(v) => v,
    };
    Ok(QuboProblem {
        qubo: qap_qubo(inst, p)?,
        kind: ProblemKind::Qap,
        sense: Sense::Min,
        decoder: Decoder::Qap(Arc::new(inst.clone())),
        penalty: Some(p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> WeightedGraph {
        WeightedGraph::unweighted(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn all_bits(n: usize) -> impl Iterator<Item = Vec<u8>> {
        (0..1u32 << n).map(move |m| (0..n).map(|i| ((m >> i) & 1) as u8).collect())
    }

    #[test]
    fn maxcut_single_edge_and_triangle() {
        let e = WeightedGraph::unweighted(2, &[(0, 1)]).unwrap();
        let p = maxcut_to_qubo(&e);
        assert_eq!(p.reported_energy(p.qubo.energy(&[0, 1]).unwrap()), 1.0);
        assert_eq!(p.reported_energy(p.qubo.energy(&[0, 0]).unwrap()), 0.0);
        assert_eq!(p.total_constraints(), 0);
        let k3 = WeightedGraph::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let p = maxcut_to_qubo(&k3);
        let best = all_bits(3).map(|x| p.reported_energy(p.qubo.energy(&x).unwrap())).fold(f64::MIN, f64::max);
        assert_eq!(best, 2.0);
        for x in all_bits(3) {
            assert_eq!(-p.qubo.energy(&x).unwrap(), cut_value(&k3, &x));
        }
    }

    #[test]
    fn maxcut_complete_145() {
        let edges: Vec<(usize, usize)> = (0..145).flat_map(|u| (u + 1..145).map(move |v| (u, v))).collect();
        let p = maxcut_to_qubo(&WeightedGraph::unweighted(145, &edges).unwrap());
        assert_eq!(p.n(), 145);
        assert_eq!(p.qubo.num_quadratic(), 10440);
    }

    #[test]
    fn mvc_single_edge() {
        let e = WeightedGraph::unweighted(2, &[(0, 1)]).unwrap();
        let p = mvc_to_qubo(&e, Penalty::Value(2.0)).unwrap();
        assert_eq!(p.qubo.energy(&[1, 0]).unwrap(), 1.0);
        assert_eq!(p.qubo.energy(&[0, 1]).unwrap(), 1.0);
        assert_eq!(p.qubo.energy(&[0, 0]).unwrap(), 2.0);
        let (o, pen) = mvc_energy_split(&e, 2.0, &[0, 0]).unwrap();
        assert_eq!(crate::qubo::pseudo_energy(o, pen), 2.0);
    }

    #[test]
    fn mvc_path_minimum() {
        let p = mvc_to_qubo(&path3(), Penalty::Value(2.0)).unwrap();
        let (e, x) = all_bits(3)
            .map(|x| (p.qubo.energy(&x).unwrap(), x))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap();
        assert_eq!(e, 1.0);
        assert_eq!(x, vec![0, 1, 0]);
    }

    #[test]
    fn mvc_penalty_bounds() {
        assert!(matches!(mvc_to_qubo(&path3(), Penalty::Value(1.0)), Err(Error::Parameter(_))));
        assert_eq!(mvc_to_qubo(&path3(), Penalty::Auto).unwrap().penalty, Some(2.0));
    }

    #[test]
    fn mvc_violation_examples() {
        assert_eq!(mvc_violations(&path3(), &[0, 1, 0]).unwrap(), 0);
        assert_eq!(mvc_violations(&path3(), &[0, 0, 0]).unwrap(), 2);
        assert!(mvc_violations(&path3(), &[0, 0]).is_err());
    }

    #[test]
    fn penalty_serde() {
        assert_eq!(serde_json::from_str::<Penalty>("\"auto\"").unwrap(), Penalty::Auto);
        assert_eq!(serde_json::from_str::<Penalty>("2.5").unwrap(), Penalty::Value(2.5));
        assert!(serde_json::from_str::<Penalty>("\"big\"").is_err());
        assert_eq!(serde_json::to_string(&Penalty::Auto).unwrap(), "\"auto\"");
    }
}
