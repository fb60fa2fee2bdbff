//! Exhaustive oracles for desk-scale instances.

use crate::error::{Error, Result};
use crate::formulations::QapInstance;
use crate::qubo::QuboMatrix;

pub const MAX_QUBO_N: usize = 24;
pub const MAX_QAP_N: usize = 10;

/// Relative tolerance for treating two energies as tied.
const TIE_TOL: f64 = 1e-9;

fn tol(e: f64) -> f64 {
    TIE_TOL * e.abs().max(1.0)
}

/// Global minimum energy and every configuration attaining it, lexicographically sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimizers {
    pub energy: f64,
    pub configs: Vec<Vec<u8>>,
}

/// Gray-code enumeration of all 2^n configurations with incremental deltas.
pub fn enumerate_minimizers(q: &QuboMatrix, max_n: usize) -> Result<Minimizers> {
    let n = q.n();
    if n > max_n || n > MAX_QUBO_N {
        return Err(Error::Capacity { size: n, limit: max_n.min(MAX_QUBO_N) });
    }
    let mut x = vec![0u8; n];
    let mut deltas = vec![0.0; n];
    q.all_deltas(&x, &mut deltas);
    let mut e = q.energy_unchecked(&x);
    let mut best = e;
    let mut configs = vec![x.clone()];
    let total: u64 = 1u64 << n;
    for t in 1..total {
        let k = t.trailing_zeros() as usize;
        e += deltas[k];
        x[k] ^= 1;
        q.update_deltas(&x, k, &mut deltas);
        if t & 0xffff == 0 {
            e = q.energy_unchecked(&x);
            q.all_deltas(&x, &mut deltas);
        }
        if e <= best + 1e3 * tol(best) {
            let exact = q.energy_unchecked(&x);
            if exact < best - tol(best) {
                best = exact;
                configs.clear();
                configs.push(x.clone());
            } else if (exact - best).abs() <= tol(best) {
                configs.push(x.clone());
                best = best.min(exact);
            }
        }
    }
    configs.retain(|c| (q.energy_unchecked(c) - best).abs() <= tol(best));
    configs.sort();
    Ok(Minimizers { energy: best, configs })
}

/// Exact minimizer; ties go to the lexicographically smallest bit vector.
pub fn brute_force_qubo(q: &QuboMatrix, max_n: usize) -> Result<(Vec<u8>, f64)> {
    let m = enumerate_minimizers(q, max_n)?;
    let x = m.configs.into_iter().next().expect("at least one configuration");
    let e = q.energy_unchecked(&x);
    Ok((x, e))
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Every optimal permutation (lexicographic order) and the optimum.
pub fn enumerate_qap_optima(inst: &QapInstance, max_n: usize) -> Result<(f64, Vec<Vec<usize>>)> {
    let n = inst.n();
    if n > max_n || n > MAX_QAP_N {
        return Err(Error::Capacity { size: n, limit: max_n.min(MAX_QAP_N) });
    }
    let mut p: Vec<usize> = (0..n).collect();
    let mut best = inst.objective(&p);
    let mut all = vec![p.clone()];
    while next_permutation(&mut p) {
        let e = inst.objective(&p);
        if e < best - tol(best) {
            best = e;
            all.clear();
            all.push(p.clone());
        } else if (e - best).abs() <= tol(best) {
            all.push(p.clone());
            best = best.min(e);
        }
    }
    all.retain(|c| (inst.objective(c) - best).abs() <= tol(best));
    Ok((best, all))
}

/// Exact QAP optimum over all n! permutations; lexicographically smallest on ties.
pub fn brute_force_qap(inst: &QapInstance, max_n: usize) -> Result<(Vec<usize>, f64)> {
    let (_, all) = enumerate_qap_optima(inst, max_n)?;
    let p = all.into_iter().next().expect("at least one permutation");
    let e = inst.objective(&p);
    Ok((p, e))
}
