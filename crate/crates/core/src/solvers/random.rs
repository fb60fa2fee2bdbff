use std::time::Instant;

use rand::seq::SliceRandom;

use super::random_bits;
use crate::error::{Error, Result};
use crate::formulations::{encode_permutation, ProblemKind, QuboProblem};
use crate::qubo::SampleSet;
use crate::rng::stream;

/// The permutation drawn for `read` of a QAP random-sampler run.
pub fn random_permutation(n: usize, seed: u64, read: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream(seed, "random", read as u64));
    perm
}

/// Uniform bit vectors, or uniform permutation matrices for QAP problems.
pub fn random_sampler(p: &QuboProblem, reads: usize, seed: u64) -> Result<SampleSet> {
    if reads == 0 {
        return Err(Error::Parameter("reads must be >= 1".into()));
    }
    let start = Instant::now();
    let bits = (0..reads)
        .map(|r| match (p.kind, p.qap_instance()) {
            (ProblemKind::Qap, Some(inst)) => encode_permutation(&random_permutation(inst.n(), seed, r)),
            _ => random_bits(p.n(), &mut stream(seed, "random", r as u64)),
        })
        .collect();
    let mut s = p.sample_set(bits, format!("random(reads={reads})"))?;
    s.solve_seconds = start.elapsed().as_secs_f64();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::{maxcut_to_qubo, qap_to_qubo, Penalty, WeightedGraph};
    use crate::generators::gen_tinyqap;

    #[test]
    fn qap_samples_are_permutations() {
        let p = qap_to_qubo(&gen_tinyqap(5, 1).unwrap(), Penalty::Auto).unwrap();
        let s = random_sampler(&p, 50, 9).unwrap();
        assert!(s.samples.iter().all(|x| x.violations == 0 && x.feasible));
    }

    #[test]
    fn single_node_bits() {
        let p = maxcut_to_qubo(&WeightedGraph::new(1, vec![]).unwrap());
        let s = random_sampler(&p, 20, 0).unwrap();
        assert!(s.samples.iter().all(|x| x.bits == vec![0] || x.bits == vec![1]));
        assert!(random_sampler(&p, 0, 0).is_err());
    }
}
