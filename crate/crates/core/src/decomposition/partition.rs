use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::{QuboProblem, ProblemKind, Decoder};
use crate::matrix::Matrix;
use crate::qubo::{QuboBuilder, Sense};
use crate::rng::{child_seed, stream};
use crate::solvers::{parallel_tempering, BetaLadder, PtConfig};

/// Element → subset map with equal subset sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub assignment: Vec<usize>,
    pub k: usize,
    pub s: usize,
}

impl Partition {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        let n = assignment.len();
        if k == 0 || !n.is_multiple_of(k) {
            return Err(Error::Parameter(format!("k={k} does not divide n={n}")));
        }
        let s = n / k;
        let mut count = vec![0usize; k];
        for &g in &assignment {
            if g >= k {
                return Err(Error::Domain(format!("subset index {g} outside 0..{k}")));
            }
            count[g] += 1;
        }
        if count.iter().any(|&c| c != s) {
            return Err(Error::Domain(format!("subset sizes {count:?} differ from capacity {s}")));
        }
        Ok(Partition { assignment, k, s })
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// Members of each subset in increasing element order.
    pub fn subsets(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::with_capacity(self.s); self.k];
        for (e, &g) in self.assignment.iter().enumerate() {
            out[g].push(e);
        }
        out
    }

    /// Relabel subsets by their smallest element so equal groupings compare equal.
    pub fn canonical(&self) -> Partition {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let assignment = self
            .assignment
            .iter()
            .map(|&g| {
                if map[g] == usize::MAX {
                    map[g] = next;
                    next += 1;
                }
                map[g]
            })
            .collect();
        Partition { assignment, k: self.k, s: self.s }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMethod {
    /// Better of annealing and greedy for n ≤ 512, greedy above.
    Auto,
    Greedy,
    Anneal { iterations: u64, replicas: usize },
    /// Enumerate every balanced partition.
    Exhaustive,
}

pub const EXHAUSTIVE_LIMIT: u64 = 2_000_000;

/// Sum over unordered same-subset pairs of (w_ij + w_ji)/2.
pub fn intra_value(w: &Matrix, p: &Partition) -> f64 {
    let mut v = 0.0;
    for i in 0..p.n() {
        for j in i + 1..p.n() {
            if p.assignment[i] == p.assignment[j] {
                v += 0.5 * (w.get(i, j) + w.get(j, i));
            }
        }
    }
    v
}

fn check(w: &Matrix, k: usize) -> Result<()> {
    if !w.is_square() {
        return Err(Error::Dimension { expected: w.rows(), got: w.cols() });
    }
    if k == 0 || !w.rows().is_multiple_of(k) {
        return Err(Error::Parameter(format!("k={k} does not divide n={}", w.rows())));
    }
    Ok(())
}

/// Capacity-s partition maximizing intra-subset flow.
///
/// Among partitions of equal intra flow, exchanges that concentrate the flow
/// diagonal (sum of squared per-subset diagonal mass) are preferred.
pub fn partition_items(flow: &Matrix, k: usize, method: &PartitionMethod, seed: u64) -> Result<Partition> {
    check(flow, k)?;
    let n = flow.rows();
    let w = Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 0.5 * (flow.get(i, j) + flow.get(j, i)) });
    let p = maximize(&w, k, method, child_seed(seed, "partition-items", 0))?;
    let diag: Vec<f64> = (0..n).map(|i| flow.get(i, i)).collect();
    if k == 1 || k == n || diag.iter().all(|&d| d == 0.0) {
        return Ok(p);
    }
    let mut assign = p.assignment;
    concentrate_ties(&w, &diag, &mut assign, k);
    Partition::new(assign, k)
}

/// Zero-gain exchanges that raise the sum of squared per-subset diagonal mass.
fn concentrate_ties(w: &Matrix, diag: &[f64], assign: &mut [usize], k: usize) {
    let n = assign.len();
    let tol = 1e-9 * w.max_abs().max(1.0);
    let mut gain = vec![0.0; n * k];
    let mut mass = vec![0.0; k];
    for i in 0..n {
        mass[assign[i]] += diag[i];
        for j in 0..n {
            if i != j {
                gain[i * k + assign[j]] += w.get(i, j);
            }
        }
    }
    let dtol = 1e-9 * diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(1.0);
    for _pass in 0..100 {
        let mut improved = false;
        for a in 0..n {
            for b in a + 1..n {
                let (ga, gb) = (assign[a], assign[b]);
                if ga == gb || diag[a] == diag[b] {
                    continue;
                }
                let d = gain[a * k + gb] - gain[a * k + ga] + gain[b * k + ga] - gain[b * k + gb] - 2.0 * w.get(a, b);
                if d.abs() > tol {
                    continue;
                }
                let delta = diag[b] - diag[a];
                if 2.0 * delta * (mass[ga] - mass[gb]) + 2.0 * delta * delta <= dtol {
                    continue;
                }
                for j in 0..n {
                    if j != a {
                        gain[j * k + ga] -= w.get(j, a);
                        gain[j * k + gb] += w.get(j, a);
                    }
                    if j != b {
                        gain[j * k + gb] -= w.get(j, b);
                        gain[j * k + ga] += w.get(j, b);
                    }
                }
                mass[ga] += delta;
                mass[gb] -= delta;
                assign[a] = gb;
                assign[b] = ga;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
}

/// Capacity-s partition minimizing intra-subset distance.
pub fn partition_locations(dist: &Matrix, k: usize, method: &PartitionMethod, seed: u64) -> Result<Partition> {
    check(dist, k)?;
    let w = Matrix::from_fn(dist.rows(), dist.rows(), |i, j| if i == j { 0.0 } else { -0.5 * (dist.get(i, j) + dist.get(j, i)) });
    maximize(&w, k, method, child_seed(seed, "partition-locations", 0))
}

fn maximize(w: &Matrix, k: usize, method: &PartitionMethod, seed: u64) -> Result<Partition> {
    let n = w.rows();
    if k == 1 {
        return Partition::new(vec![0; n], 1);
    }
    if k == n {
        return Partition::new((0..n).collect(), n);
    }
    match method {
        PartitionMethod::Greedy => Ok(greedy(w, k)),
        PartitionMethod::Exhaustive => exhaustive(w, k),
        PartitionMethod::Anneal { iterations, replicas } => anneal(w, k, *iterations, *replicas, seed),
        PartitionMethod::Auto => {
            let g = greedy(w, k);
            if n > 512 {
                return Ok(g);
            }
            let a = anneal(w, k, 20_000, 16, seed)?;
            Ok(if intra_value(w, &a) >= intra_value(w, &g) { a } else { g })
        }
    }
}

/// Number of balanced partitions of n elements into k unlabeled groups.
pub fn balanced_partition_count(n: usize, k: usize) -> u64 {
    if k == 0 || !n.is_multiple_of(k) {
        return 0;
    }
    let s = n / k;
    // n! / ((s!)^k k!) computed as a product of binomials
    let mut total: f64 = 1.0;
    let mut left = n;
    for _ in 0..k {
        total *= binom(left - 1, s - 1);
        left -= s;
    }
    total.round() as u64
}

fn binom(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn exhaustive(w: &Matrix, k: usize) -> Result<Partition> {
    let n = w.rows();
    let count = balanced_partition_count(n, k);
    if count > EXHAUSTIVE_LIMIT {
        return Err(Error::Capacity { size: count as usize, limit: EXHAUSTIVE_LIMIT as usize });
    }
    let s = n / k;
    let mut assign = vec![usize::MAX; n];
    let mut sizes = vec![0usize; k];
    let mut best: Option<(f64, Vec<usize>)> = None;
    fn rec(w: &Matrix, e: usize, used: usize, s: usize, assign: &mut Vec<usize>, sizes: &mut Vec<usize>, val: f64, best: &mut Option<(f64, Vec<usize>)>) {
        let n = assign.len();
        if e == n {
            if best.as_ref().is_none_or(|b| val > b.0 + 1e-12 * b.0.abs().max(1.0)) {
                *best = Some((val, assign.clone()));
            }
            return;
        }
        let k = sizes.len();
        // groups are opened in order, so the first element of each group is its minimum
        for g in 0..(used + 1).min(k) {
            if sizes[g] == s {
                continue;
            }
            let gain: f64 = (0..e).filter(|&j| assign[j] == g).map(|j| w.get(e, j)).sum();
            assign[e] = g;
            sizes[g] += 1;
            rec(w, e + 1, used.max(g + 1), s, assign, sizes, val + gain, best);
            sizes[g] -= 1;
            assign[e] = usize::MAX;
        }
    }
    rec(w, 0, 0, s, &mut assign, &mut sizes, 0.0, &mut best);
    Partition::new(best.expect("at least one partition").1, k)
}

fn greedy(w: &Matrix, k: usize) -> Partition {
    let n = w.rows();
    let s = n / k;
    let mut assign = vec![usize::MAX; n];
    let mut sizes = vec![0usize; k];
    if s >= 2 {
        let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        pairs.sort_by(|a, b| w.get(b.0, b.1).total_cmp(&w.get(a.0, a.1)).then(a.cmp(b)));
        let mut g = 0;
        for (i, j) in pairs {
            if g == k {
                break;
            }
            if assign[i] == usize::MAX && assign[j] == usize::MAX {
                assign[i] = g;
                assign[j] = g;
                sizes[g] = 2;
                g += 1;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&i| assign[i] == usize::MAX).collect();
    let strength: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w.get(i, j)).sum()).collect();
    order.sort_by(|&a, &b| strength[b].total_cmp(&strength[a]).then(a.cmp(&b)));
    for i in order {
        let mut best_g = usize::MAX;
        let mut best_gain = f64::NEG_INFINITY;
        for g in 0..k {
            if sizes[g] == s {
                continue;
            }
            let gain: f64 = (0..n).filter(|&j| assign[j] == g).map(|j| w.get(i, j)).sum();
            if gain > best_gain {
                best_gain = gain;
                best_g = g;
            }
        }
        assign[i] = best_g;
        sizes[best_g] += 1;
    }
    refine(w, &mut assign, k);
    Partition::new(assign, k).expect("greedy keeps capacities")
}

/// Pairwise exchange, then Kernighan-Lin passes when affordable, until neither improves.
fn refine(w: &Matrix, assign: &mut [usize], k: usize) {
    let n = assign.len();
    let s = (n / k) as f64;
    let affordable = (k * (k - 1) / 2) as f64 * s * s * s <= KL_BUDGET;
    for _ in 0..20 {
        exchange(w, assign, k);
        if !affordable || !kernighan_lin(w, assign, k) {
            break;
        }
    }
}

/// Rough operation budget per Kernighan-Lin sweep over all subset pairs.
const KL_BUDGET: f64 = 2e8;

/// One Kernighan-Lin pass for every pair of subsets; true if anything improved.
fn kernighan_lin(w: &Matrix, assign: &mut [usize], k: usize) -> bool {
    let n = assign.len();
    let tol = 1e-9 * w.max_abs().max(1e-300);
    let mut improved = false;
    for g in 0..k {
        for h in g + 1..k {
            let a_side: Vec<usize> = (0..n).filter(|&i| assign[i] == g).collect();
            let b_side: Vec<usize> = (0..n).filter(|&i| assign[i] == h).collect();
            // d[x] = affinity to the other side minus affinity to its own side
            let ext_int = |x: usize, own: usize| -> f64 {
                let mut v = 0.0;
                for j in a_side.iter().chain(&b_side) {
                    if *j != x {
                        v += if assign[*j] == own { -w.get(x, *j) } else { w.get(x, *j) };
                    }
                }
                v
            };
            let mut da: Vec<f64> = a_side.iter().map(|&x| ext_int(x, g)).collect();
            let mut db: Vec<f64> = b_side.iter().map(|&x| ext_int(x, h)).collect();
            let mut la = vec![false; a_side.len()];
            let mut lb = vec![false; b_side.len()];
            let mut seq = Vec::with_capacity(a_side.len());
            let (mut cum, mut best, mut best_len) = (0.0, 0.0, 0);
            for _ in 0..a_side.len() {
                let mut pick: Option<(f64, usize, usize)> = None;
                for (p, &x) in a_side.iter().enumerate() {
                    if la[p] {
                        continue;
                    }
                    for (q, &y) in b_side.iter().enumerate() {
                        if lb[q] {
                            continue;
                        }
                        let gain = da[p] + db[q] - 2.0 * w.get(x, y);
                        if pick.is_none_or(|b| gain > b.0) {
                            pick = Some((gain, p, q));
                        }
                    }
                }
                let (gain, p, q) = pick.expect("unlocked pair remains");
                la[p] = true;
                lb[q] = true;
                let (x, y) = (a_side[p], b_side[q]);
                for (r, &u) in a_side.iter().enumerate() {
                    if !la[r] {
                        da[r] += 2.0 * (w.get(u, x) - w.get(u, y));
                    }
                }
                for (r, &u) in b_side.iter().enumerate() {
                    if !lb[r] {
                        db[r] += 2.0 * (w.get(u, y) - w.get(u, x));
                    }
                }
                seq.push((x, y));
                cum += gain;
                if cum > best + tol {
                    best = cum;
                    best_len = seq.len();
                }
            }
            for &(x, y) in &seq[..best_len] {
                assign[x] = h;
                assign[y] = g;
            }
            improved |= best_len > 0;
        }
    }
    improved
}

/// Pairwise exchange between subsets while the objective improves.
fn exchange(w: &Matrix, assign: &mut [usize], k: usize) {
    let n = assign.len();
    // gain[i][g] = sum of w(i, j) over members j of subset g
    let mut gain = vec![0.0; n * k];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                gain[i * k + assign[j]] += w.get(i, j);
            }
        }
    }
    for _pass in 0..100 {
        let mut improved = false;
        for a in 0..n {
            for b in a + 1..n {
                let (ga, gb) = (assign[a], assign[b]);
                if ga == gb {
                    continue;
                }
                let d = gain[a * k + gb] - gain[a * k + ga] + gain[b * k + ga] - gain[b * k + gb] - 2.0 * w.get(a, b);
                if d > 1e-12 {
                    for j in 0..n {
                        if j != a {
                            gain[j * k + ga] -= w.get(j, a);
                            gain[j * k + gb] += w.get(j, a);
                        }
                        if j != b {
                            gain[j * k + gb] -= w.get(j, b);
                            gain[j * k + ga] += w.get(j, b);
                        }
                    }
                    assign[a] = gb;
                    assign[b] = ga;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// One-hot element→subset QUBO with capacity-equality penalties, solved by parallel tempering.
fn anneal(w: &Matrix, k: usize, iterations: u64, replicas: usize, seed: u64) -> Result<Partition> {
    let n = w.rows();
    let s = n / k;
    let var = |i: usize, g: usize| i * k + g;
    let max_w = w.max_abs();
    let p = if max_w > 0.0 { n as f64 * max_w } else { 1.0 };
    let mut b = QuboBuilder::new(n * k);
    for i in 0..n {
        for j in i + 1..n {
            let v = w.get(i, j);
            if v != 0.0 {
                for g in 0..k {
                    b.add(var(i, g), var(j, g), -v);
                }
            }
        }
    }
    // P (sum_g x_ig - 1)^2 for every element
    for i in 0..n {
        b.add_offset(p);
        for g in 0..k {
            b.add(var(i, g), var(i, g), -p);
            for h in g + 1..k {
                b.add(var(i, g), var(i, h), 2.0 * p);
            }
        }
    }
    // P (sum_i x_ig - s)^2 for every subset
    for g in 0..k {
        b.add_offset(p * (s * s) as f64);
        for i in 0..n {
            b.add(var(i, g), var(i, g), p * (1.0 - 2.0 * s as f64));
            for j in i + 1..n {
                b.add(var(i, g), var(j, g), 2.0 * p);
            }
        }
    }
    let problem = QuboProblem { qubo: b.build(), kind: ProblemKind::Raw, sense: Sense::Min, decoder: Decoder::None, penalty: Some(p) };
    let scale = problem.qubo.coefficient_scale();
    let cfg = PtConfig {
        replicas: replicas.max(2),
        iterations,
        beta_ladder: BetaLadder::Geometric { hot: 0.1 / scale.max_abs, cold: 20.0 / max_w.max(1e-12) },
        swap_interval: 10,
        offset_increase_rate: 0.0,
        seed,
    };
    let set = parallel_tempering(&problem, &cfg)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for smp in &set.samples {
        let assign = repair_assignment(&smp.bits, n, k, w, seed);
        let mut a = assign.clone();
        refine(w, &mut a, k);
        let part = Partition::new(a, k)?;
        let v = intra_value(w, &part);
        if best.as_ref().is_none_or(|b| v > b.0) {
            best = Some((v, part.assignment));
        }
    }
    Partition::new(best.expect("replicas >= 2").1, k)
}

/// Decode one-hot bits, keeping valid choices and greedily placing the rest.
fn repair_assignment(bits: &[u8], n: usize, k: usize, w: &Matrix, seed: u64) -> Vec<usize> {
    let s = n / k;
    let mut assign = vec![usize::MAX; n];
    let mut sizes = vec![0usize; k];
    for i in 0..n {
        let chosen: Vec<usize> = (0..k).filter(|&g| bits[i * k + g] == 1).collect();
        if chosen.len() == 1 && sizes[chosen[0]] < s {
            assign[i] = chosen[0];
            sizes[chosen[0]] += 1;
        }
    }
    let mut rest: Vec<usize> = (0..n).filter(|&i| assign[i] == usize::MAX).collect();
    rest.shuffle(&mut stream(seed, "partition-repair", 0));
    for i in rest {
        let g = (0..k)
            .filter(|&g| sizes[g] < s)
            .max_by(|&g, &h| {
                let a: f64 = (0..n).filter(|&j| assign[j] == g).map(|j| w.get(i, j)).sum();
                let b: f64 = (0..n).filter(|&j| assign[j] == h).map(|j| w.get(i, j)).sum();
                a.total_cmp(&b).then(h.cmp(&g))
            })
            .expect("capacity remains");
        assign[i] = g;
        sizes[g] += 1;
    }
    assign
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_items() -> Matrix {
        Matrix::from_fn(4, 4, |i, j| {
            if i == j {
                0.0
            } else if (i, j) == (0, 1) || (i, j) == (1, 0) || (i, j) == (2, 3) || (i, j) == (3, 2) {
                10.0
            } else {
                1.0
            }
        })
    }

    #[test]
    fn pairs_grouped_by_every_method() {
        for m in [
            PartitionMethod::Greedy,
            PartitionMethod::Exhaustive,
            PartitionMethod::Anneal { iterations: 2000, replicas: 8 },
        ] {
            let p = partition_items(&four_items(), 2, &m, 1).unwrap().canonical();
            assert_eq!(p.assignment, vec![0, 0, 1, 1], "{m:?}");
            assert_eq!(intra_value(&four_items(), &p), 20.0);
        }
    }

    #[test]
    fn trivial_k() {
        let f = four_items();
        let one = partition_items(&f, 1, &PartitionMethod::Greedy, 0).unwrap();
        assert_eq!(intra_value(&f, &one), (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).map(|(i, j)| f.get(i, j)).sum::<f64>());
        let all = partition_items(&f, 4, &PartitionMethod::Greedy, 0).unwrap();
        assert_eq!(intra_value(&f, &all), 0.0);
        assert!(partition_items(&f, 3, &PartitionMethod::Greedy, 0).is_err());
    }

    #[test]
    fn locations_follow_columns() {
        // two columns of two locations, delta 1 within, 8 across
        let col = [0, 0, 1, 1];
        let d = Matrix::from_fn(4, 4, |a, b| if a == b { 0.0 } else if col[a] == col[b] { 1.0 } else { 8.0 });
        for m in [PartitionMethod::Greedy, PartitionMethod::Exhaustive] {
            let p = partition_locations(&d, 2, &m, 0).unwrap().canonical();
            assert_eq!(p.assignment, vec![0, 0, 1, 1]);
            assert_eq!(-intra_value(&Matrix::from_fn(4, 4, |a, b| -d.get(a, b)), &p), 2.0);
        }
    }

    #[test]
    fn constant_matrix_tie_is_deterministic() {
        let d = Matrix::from_fn(6, 6, |a, b| if a == b { 0.0 } else { 2.0 });
        for m in [PartitionMethod::Greedy, PartitionMethod::Exhaustive] {
            let a = partition_locations(&d, 3, &m, 5).unwrap();
            let b = partition_locations(&d, 3, &m, 5).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn partition_counts() {
        assert_eq!(balanced_partition_count(4, 2), 3);
        assert_eq!(balanced_partition_count(9, 3), 280);
        assert_eq!(balanced_partition_count(6, 3), 15);
        assert!(Partition::new(vec![0, 0, 1], 2).is_err());
        assert!(Partition::new(vec![0, 0, 0, 1], 2).is_err());
    }
}
