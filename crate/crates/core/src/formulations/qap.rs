use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::qubo::{QuboBuilder, QuboMatrix};

/// Flow matrix F and distance matrix D of equal order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QapInstance {
    n: usize,
    flow: Matrix,
    dist: Matrix,
}

impl QapInstance {
    /// Accepts general square matrices (QAPLIB files may be asymmetric);
    /// distances must be finite and non-negative.
    pub fn new(flow: Matrix, dist: Matrix) -> Result<Self> {
        if !flow.is_square() {
            return Err(Error::Dimension { expected: flow.rows(), got: flow.cols() });
        }
        if dist.rows() != flow.rows() || !dist.is_square() {
            return Err(Error::Dimension { expected: flow.rows(), got: dist.rows() });
        }
        if flow.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite flow entry".into()));
        }
        if dist.data().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain("distance entries must be finite and >= 0".into()));
        }
        Ok(QapInstance { n: flow.rows(), flow, dist })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn flow(&self) -> &Matrix {
        &self.flow
    }

    pub fn dist(&self) -> &Matrix {
        &self.dist
    }

    /// Symmetric flow with zero diagonal.
    pub fn has_canonical_flow(&self) -> bool {
        self.flow.is_symmetric() && (0..self.n).all(|i| self.flow.get(i, i) == 0.0)
    }

    /// sum_ij f_ij d_{p(i) p(j)} where `perm[i]` is the location of facility i.
    pub fn objective(&self, perm: &[usize]) -> f64 {
        let n = self.n;
        let mut e = 0.0;
        for i in 0..n {
            let pi = perm[i];
            for j in 0..n {
                let f = self.flow.get(i, j);
                if f != 0.0 {
                    e += f * self.dist.get(pi, perm[j]);
                }
            }
        }
        e
    }

    /// Objective change when facilities r and s exchange locations.
    pub fn swap_delta(&self, perm: &[usize], r: usize, s: usize) -> f64 {
        if r == s {
            return 0.0;
        }
        let (f, d) = (&self.flow, &self.dist);
        let (pr, ps) = (perm[r], perm[s]);
        let mut delta = (f.get(r, r) - f.get(s, s)) * (d.get(ps, ps) - d.get(pr, pr))
            + (f.get(r, s) - f.get(s, r)) * (d.get(ps, pr) - d.get(pr, ps));
        for k in 0..self.n {
            if k == r || k == s {
                continue;
            }
            let pk = perm[k];
            delta += (f.get(k, r) - f.get(k, s)) * (d.get(pk, ps) - d.get(pk, pr))
                + (f.get(r, k) - f.get(s, k)) * (d.get(ps, pk) - d.get(pr, pk));
        }
        delta
    }
}

/// Variable index of "facility i at location k".
#[inline]
pub fn find_index(n: usize, i: usize, k: usize) -> usize {
    i * n + k
}

/// Objective part of the QAP QUBO: Q[x_ik][x_jl] = F[i][j] D[k][l], folded upper-triangular.
pub fn qap_objective_qubo(inst: &QapInstance) -> QuboMatrix {
    let mut b = QuboBuilder::new(inst.n * inst.n);
    add_objective_terms(inst, &mut b);
    b.build()
}

fn add_objective_terms(inst: &QapInstance, b: &mut QuboBuilder) {
    let n = inst.n;
    for i in 0..n {
        for j in 0..n {
            let f = inst.flow.get(i, j);
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    let v = f * inst.dist.get(k, l);
                    if v != 0.0 {
                        b.add(find_index(n, i, k), find_index(n, j, l), v);
                    }
                }
            }
        }
    }
}

/// Row count used by the constraint system: n² rows, or 2n when that is larger (n = 1).
pub fn constraint_rows(n: usize) -> usize {
    (n * n).max(2 * n)
}

/// Rows 0..n encode "facility i placed once", rows n..2n "location k filled once".
pub fn prepare_matrix_a(n: usize) -> Matrix {
    let mut a = Matrix::zeros(constraint_rows(n), n * n);
    for i in 0..n {
        for k in 0..n {
            a.set(i, find_index(n, i, k), 1.0);
        }
    }
    for k in 0..n {
        for i in 0..n {
            a.set(n + k, find_index(n, i, k), 1.0);
        }
    }
    a
}

pub fn prepare_vector_b(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; constraint_rows(n)];
    b[..2 * n].iter_mut().for_each(|v| *v = 1.0);
    b
}

/// Equality constraints `a x = b` already scaled by sqrt(P).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub penalty: f64,
}

impl ConstraintSystem {
    pub fn for_qap(n: usize, penalty: f64) -> Result<Self> {
        check_penalty(penalty)?;
        let s = penalty.sqrt();
        let mut a = prepare_matrix_a(n);
        for r in 0..a.rows() {
            for c in 0..a.cols() {
                let v = a.get(r, c);
                if v != 0.0 {
                    a.set(r, c, v * s);
                }
            }
        }
        let b = prepare_vector_b(n).into_iter().map(|v| v * s).collect();
        Ok(ConstraintSystem { a, b, penalty })
    }
}

fn check_penalty(p: f64) -> Result<()> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("penalty must be positive and finite, got {p}")));
    }
    Ok(())
}

/// QUBO of P·‖a x − b‖²: AᵀA − 2 diag(bᵀA) on the sqrt(P)-scaled system, offset bᵀb.
pub fn a_to_q(a: &Matrix, b: &[f64], penalty: f64) -> Result<QuboMatrix> {
    check_penalty(penalty)?;
    if b.len() != a.rows() {
        return Err(Error::Dimension { expected: a.rows(), got: b.len() });
    }
    let mut builder = QuboBuilder::new(a.cols());
    add_penalty_terms(a, b, penalty, &mut builder);
    Ok(builder.build())
}

fn add_penalty_terms(a: &Matrix, b: &[f64], penalty: f64, out: &mut QuboBuilder) {
    let s = penalty.sqrt();
    let m = a.cols();
    let mut ata = vec![0.0; m * m];
    let mut bta = vec![0.0; m];
    let mut btb = 0.0;
    for r in 0..a.rows() {
        let nz: Vec<(usize, f64)> =
            a.row(r).iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(c, &v)| (c, v * s)).collect();
        let br = b[r] * s;
        btb += br * br;
        for &(u, au) in &nz {
            bta[u] += br * au;
            for &(v, av) in &nz {
                ata[u * m + v] += au * av;
            }
        }
    }
    for u in 0..m {
        let d = ata[u * m + u] - 2.0 * bta[u];
        if d != 0.0 {
            out.add(u, u, d);
        }
        for v in u + 1..m {
            let q = ata[u * m + v] + ata[v * m + u];
            if q != 0.0 {
                out.add(u, v, q);
            }
        }
    }
    out.add_offset(btb);
}

/// Automatic QAP penalty: n times the largest |coefficient| of the objective QUBO.
pub fn auto_qap_penalty(inst: &QapInstance) -> f64 {
    let c = qap_objective_qubo(inst).coefficient_scale().max_abs;
    let p = inst.n as f64 * c;
    if p > 0.0 {
        p
    } else {
        1.0
    }
}

/// Full QAP QUBO: objective plus penalty on the 2n one-hot constraints.
pub fn qap_qubo(inst: &QapInstance, penalty: f64) -> Result<QuboMatrix> {
    check_penalty(penalty)?;
    let n = inst.n;
    let mut b = QuboBuilder::new(n * n);
    add_objective_terms(inst, &mut b);
    add_penalty_terms(&prepare_matrix_a(n), &prepare_vector_b(n), penalty, &mut b);
    Ok(b.build())
}

/// Number of the 2n one-hot constraints whose sum differs from 1.
pub fn qap_violations(n: usize, x: &[u8]) -> Result<usize> {
    if x.len() != n * n {
        return Err(Error::Dimension { expected: n * n, got: x.len() });
    }
    let mut bad = 0;
    for i in 0..n {
        if (0..n).map(|k| x[find_index(n, i, k)] as usize).sum::<usize>() != 1 {
            bad += 1;
        }
    }
    for k in 0..n {
        if (0..n).map(|i| x[find_index(n, i, k)] as usize).sum::<usize>() != 1 {
            bad += 1;
        }
    }
    Ok(bad)
}

/// perm[i] = location of facility i, if x is a permutation matrix.
pub fn decode_permutation(n: usize, x: &[u8]) -> Option<Vec<usize>> {
    if qap_violations(n, x).ok()? != 0 {
        return None;
    }
    Some((0..n).map(|i| (0..n).find(|&k| x[find_index(n, i, k)] == 1).unwrap()).collect())
}

pub fn encode_permutation(perm: &[usize]) -> Vec<u8> {
    let n = perm.len();
    let mut x = vec![0u8; n * n];
    for (i, &k) in perm.iter().enumerate() {
        x[find_index(n, i, k)] = 1;
    }
    x
}

pub fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    perm.iter().all(|&k| k < seen.len() && !std::mem::replace(&mut seen[k], true))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy2() -> QapInstance {
        QapInstance::new(
            Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
            Matrix::from_rows(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_and_two_facility() {
        let one = QapInstance::new(Matrix::square(1), Matrix::from_rows(&[vec![4.0]]).unwrap()).unwrap();
        assert_eq!(qap_objective_qubo(&one).energy(&[1]).unwrap(), 0.0);
        let q = qap_objective_qubo(&toy2());
        for perm in [[0, 1], [1, 0]] {
            assert_eq!(q.energy(&encode_permutation(&perm)).unwrap(), 6.0);
            assert_eq!(toy2().objective(&perm), 6.0);
        }
    }

    #[test]
    fn matrix_a_small_cases() {
        let a1 = prepare_matrix_a(1);
        assert_eq!((a1.rows(), a1.cols()), (2, 1));
        assert_eq!(a1.row(0), &[1.0]);
        assert_eq!(a1.row(1), &[1.0]);
        assert_eq!(prepare_vector_b(1), vec![1.0, 1.0]);
        let a2 = prepare_matrix_a(2);
        assert_eq!(a2.row(0), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(a2.row(2), &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(prepare_vector_b(2), vec![1.0; 4]);
        let a3 = prepare_matrix_a(3);
        assert!(a3.row(6).iter().all(|v| *v == 0.0));
        assert_eq!(prepare_vector_b(3).iter().filter(|v| **v == 1.0).count(), 6);
    }

    #[test]
    fn scaled_system_entries() {
        let cs = ConstraintSystem::for_qap(3, 7.0).unwrap();
        let s = 7f64.sqrt();
        let nonzero_rows = (0..cs.a.rows()).filter(|&r| cs.a.row(r).iter().any(|v| *v != 0.0)).count();
        assert_eq!(nonzero_rows, 6);
        assert!(cs.a.data().iter().all(|v| *v == 0.0 || *v == s));
        assert!(cs.b.iter().all(|v| *v == 0.0 || *v == s));
    }

    #[test]
    fn a_to_q_examples() {
        for n in 1..=4 {
            let q = a_to_q(&prepare_matrix_a(n), &prepare_vector_b(n), 1.5).unwrap();
            assert!((q.energy(&vec![0; n * n]).unwrap() - 2.0 * n as f64 * 1.5).abs() < 1e-12);
        }
        let q = a_to_q(&prepare_matrix_a(2), &prepare_vector_b(2), 1.0).unwrap();
        assert_eq!(q.energy(&encode_permutation(&[1, 0])).unwrap(), 0.0);
        assert!(a_to_q(&prepare_matrix_a(2), &prepare_vector_b(2), 0.0).is_err());
        assert!(a_to_q(&prepare_matrix_a(2), &[1.0], 1.0).is_err());
    }

    #[test]
    fn violations_examples() {
        assert_eq!(qap_violations(3, &encode_permutation(&[2, 0, 1])).unwrap(), 0);
        assert_eq!(qap_violations(3, &[0; 9]).unwrap(), 6);
        assert_eq!(qap_violations(3, &[1; 9]).unwrap(), 6);
        assert!(qap_violations(3, &[0; 8]).is_err());
    }

    #[test]
    fn find_index_is_bijection() {
        for n in 1..7 {
            let mut seen = vec![false; n * n];
            for i in 0..n {
                for k in 0..n {
                    assert!(!std::mem::replace(&mut seen[find_index(n, i, k)], true));
                }
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    #[test]
    fn rejects_bad_instances() {
        assert!(QapInstance::new(Matrix::square(2), Matrix::square(3)).is_err());
        assert!(QapInstance::new(Matrix::zeros(2, 3), Matrix::square(2)).is_err());
        let neg = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        assert!(QapInstance::new(Matrix::square(2), neg).is_err());
    }
}
