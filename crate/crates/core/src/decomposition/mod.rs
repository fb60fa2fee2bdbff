//! Block-structured QAP decomposition: partition, match, solve sub-QAPs, recombine.

mod partition;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use partition::{balanced_partition_count, intra_value, partition_items, partition_locations, Partition, PartitionMethod, EXHAUSTIVE_LIMIT};

use crate::error::{Error, Result};
use crate::formulations::{decode_permutation, encode_permutation, qap_to_qubo, QapInstance, Penalty};
use crate::matrix::Matrix;
use crate::rng::{child_seed, stream};
use crate::solvers::{brute_force_qap, permutation_annealer, solve, PermAnnealConfig, QapObjective, RunOptions, SolverConfig, MAX_QAP_N};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    Random,
    Exhaustive,
}

pub const MAX_EXHAUSTIVE_K: usize = 8;

/// Size-s QAP induced by one matched (item subset, location subset) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubQap {
    pub inst: QapInstance,
    pub item_ids: Vec<usize>,
    pub location_ids: Vec<usize>,
}

impl SubQap {
    pub fn extract(inst: &QapInstance, item_ids: Vec<usize>, location_ids: Vec<usize>) -> Result<Self> {
        if item_ids.len() != location_ids.len() {
            return Err(Error::Dimension { expected: item_ids.len(), got: location_ids.len() });
        }
        let sub = QapInstance::new(inst.flow().select(&item_ids), inst.dist().select(&location_ids))?;
        Ok(SubQap { inst: sub, item_ids, location_ids })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionPlan {
    pub item_partition: Partition,
    pub location_partition: Partition,
    /// matching[item subset] = location subset
    pub matching: Vec<usize>,
    pub sub_seeds: Vec<u64>,
    #[serde(skip)]
    pub sub_qaps: Vec<SubQap>,
}

impl DecompositionPlan {
    /// JSON manifest of partitions, matching and per-sub-QAP seeds.
    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    /// Reads a manifest and rebuilds the sub-QAPs against `inst`.
    pub fn from_text(text: &str, inst: &QapInstance) -> Result<Self> {
        let mut p: DecompositionPlan = serde_json::from_str(text)?;
        p.item_partition = Partition::new(p.item_partition.assignment, p.item_partition.k)?;
        p.location_partition = Partition::new(p.location_partition.assignment, p.location_partition.k)?;
        if p.sub_seeds.len() != p.item_partition.k {
            return Err(Error::Schema("one seed per sub-QAP expected".into()));
        }
        p.sub_qaps = build_sub_qaps(inst, &p.item_partition, &p.location_partition, &p.matching)?;
        Ok(p)
    }
}

fn check_bijection(m: &[usize], k: usize) -> Result<()> {
    if m.len() != k || !crate::formulations::is_permutation(m) {
        return Err(Error::Domain("matching is not a bijection on the subsets".into()));
    }
    Ok(())
}

pub fn build_sub_qaps(inst: &QapInstance, items: &Partition, locs: &Partition, matching: &[usize]) -> Result<Vec<SubQap>> {
    if items.k != locs.k || items.n() != inst.n() || locs.n() != inst.n() {
        return Err(Error::Dimension { expected: items.k, got: locs.k });
    }
    check_bijection(matching, items.k)?;
    let isub = items.subsets();
    let lsub = locs.subsets();
    (0..items.k).map(|g| SubQap::extract(inst, isub[g].clone(), lsub[matching[g]].clone())).collect()
}

/// Stitch per-subset local permutations into one global permutation.
pub fn combine_subsolutions(n: usize, subs: &[SubQap], local: &[Vec<usize>]) -> Vec<usize> {
    let mut perm = vec![usize::MAX; n];
    for (sq, lp) in subs.iter().zip(local) {
        for (p, &q) in lp.iter().enumerate() {
            perm[sq.item_ids[p]] = sq.location_ids[q];
        }
    }
    perm
}

/// Bijection item subset → location subset.
///
/// Exhaustive mode minimizes the expected full objective when every subset's
/// items are placed uniformly at random on its matched locations.
pub fn match_subsets(inst: &QapInstance, items: &Partition, locs: &Partition, mode: MatchMode, seed: u64) -> Result<Vec<usize>> {
    if items.k != locs.k {
        return Err(Error::Dimension { expected: items.k, got: locs.k });
    }
    let k = items.k;
    match mode {
        MatchMode::Random => {
            let mut m: Vec<usize> = (0..k).collect();
            m.shuffle(&mut stream(seed, "match", 0));
            Ok(m)
        }
        MatchMode::Exhaustive => {
            if k > MAX_EXHAUSTIVE_K {
                return Err(Error::Capacity { size: k, limit: MAX_EXHAUSTIVE_K });
            }
            let e = ExpectedCost::new(inst, items, locs);
            let mut m: Vec<usize> = (0..k).collect();
            let mut best: Option<(f64, Vec<usize>)> = None;
            loop {
                let cost = e.of(&m);
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    best = Some((cost, m.clone()));
                }
                if !next_perm(&mut m) {
                    break;
                }
            }
            Ok(best.expect("k >= 1").1)
        }
    }
}

/// Block sums of flow and block means of distance for expected-cost matching.
struct ExpectedCost {
    k: usize,
    /// flow[g*k+h]: total flow from item subset g to h, diagonal pairs excluded
    flow: Vec<f64>,
    flow_diag: Vec<f64>,
    /// dist[a*k+b]: mean distance between distinct locations of subsets a and b
    dist: Vec<f64>,
    dist_diag: Vec<f64>,
}

impl ExpectedCost {
    fn new(inst: &QapInstance, items: &Partition, locs: &Partition) -> Self {
        let k = items.k;
        let n = inst.n();
        let (f, d) = (inst.flow(), inst.dist());
        let mut flow = vec![0.0; k * k];
        let mut flow_diag = vec![0.0; k];
        let mut dist = vec![0.0; k * k];
        let mut pairs = vec![0usize; k * k];
        let mut dist_diag = vec![0.0; k];
        for i in 0..n {
            let (g, a) = (items.assignment[i], locs.assignment[i]);
            flow_diag[g] += f.get(i, i);
            dist_diag[a] += d.get(i, i) / locs.s as f64;
            for j in 0..n {
                if i != j {
                    flow[g * k + items.assignment[j]] += f.get(i, j);
                    let b = locs.assignment[j];
                    dist[a * k + b] += d.get(i, j);
                    pairs[a * k + b] += 1;
                }
            }
        }
        for (x, &c) in dist.iter_mut().zip(&pairs) {
            if c > 0 {
                *x /= c as f64;
            }
        }
        ExpectedCost { k, flow, flow_diag, dist, dist_diag }
    }

    fn of(&self, m: &[usize]) -> f64 {
        let k = self.k;
        let mut c = 0.0;
        for g in 0..k {
            c += self.flow_diag[g] * self.dist_diag[m[g]];
            for h in 0..k {
                c += self.flow[g * k + h] * self.dist[m[g] * k + m[h]];
            }
        }
        c
    }
}

fn next_perm(p: &mut [usize]) -> bool {
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExteriorConfig {
    pub alpha0: f64,
    pub beta: f64,
    pub max_rounds: usize,
}

impl Default for ExteriorConfig {
    fn default() -> Self {
        ExteriorConfig { alpha0: 10_000.0, beta: 1.5, max_rounds: 12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorOutcome {
    pub perm: Vec<usize>,
    pub energy: f64,
    /// A sampler returned a permutation matrix (no repair needed).
    pub feasible: bool,
    pub rounds: usize,
    pub final_alpha: f64,
}

/// Re-solve with growing penalty until a sample decodes to a permutation.
///
/// Each round warm-starts from the previous round's best sample; the first
/// round starts from a seeded random permutation matrix. If no round yields a
/// permutation, the best infeasible sample is repaired.
pub fn exterior_penalty_solve(inst: &QapInstance, cfg: &ExteriorConfig, solver: &SolverConfig, seed: u64) -> Result<ExteriorOutcome> {
    if !(cfg.alpha0 > 0.0 && cfg.beta > 1.0 && cfg.max_rounds >= 1) {
        return Err(Error::Parameter("exterior penalty needs alpha0 > 0, beta > 1, max_rounds >= 1".into()));
    }
    let n = inst.n();
    let mut start: Vec<usize> = (0..n).collect();
    start.shuffle(&mut stream(seed, "exterior-start", 0));
    let mut initial = encode_permutation(&start);
    let mut alpha = cfg.alpha0;
    for round in 1..=cfg.max_rounds {
        let problem = qap_to_qubo(inst, Penalty::Value(alpha))?;
        let cfg_r = solver.with_seed(child_seed(seed, "exterior", round as u64));
        let opts = RunOptions { initial: Some(initial.clone()), trace: false };
        let set = solve(&problem, &cfg_r, &opts)?.samples;
        if let Some(best) = set.best_feasible() {
            let perm = decode_permutation(n, &best.bits).expect("feasible sample is a permutation");
            let energy = inst.objective(&perm);
            return Ok(ExteriorOutcome { perm, energy, feasible: true, rounds: round, final_alpha: alpha });
        }
        initial = set.best().expect("non-empty sample set").bits.clone();
        if round < cfg.max_rounds {
            alpha *= cfg.beta;
        }
    }
    let perm = repair_permutation(inst, &initial);
    let energy = inst.objective(&perm);
    Ok(ExteriorOutcome { perm, energy, feasible: false, rounds: cfg.max_rounds, final_alpha: alpha })
}

/// Row-by-row assignment: keep a set, unused column when there is one, else the
/// unused column with the least added cost.
pub fn repair_permutation(inst: &QapInstance, x: &[u8]) -> Vec<usize> {
    let n = inst.n();
    let (f, d) = (inst.flow(), inst.dist());
    let mut used = vec![false; n];
    let mut perm = vec![usize::MAX; n];
    for i in 0..n {
        let chosen = (0..n).find(|&k| x[i * n + k] == 1 && !used[k]);
        let k = chosen.unwrap_or_else(|| {
            (0..n)
                .filter(|&k| !used[k])
                .min_by(|&a, &b| {
                    let cost = |k: usize| {
                        let mut c = f.get(i, i) * d.get(k, k);
                        for j in 0..i {
                            c += f.get(i, j) * d.get(k, perm[j]) + f.get(j, i) * d.get(perm[j], k);
                        }
                        c
                    };
                    cost(a).total_cmp(&cost(b)).then(a.cmp(&b))
                })
                .expect("a free column remains")
        });
        used[k] = true;
        perm[i] = k;
    }
    perm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SubSolver {
    /// QUBO sampler inside the exterior penalty loop.
    Qubo {
        solver: SolverConfig,
        #[serde(default)]
        exterior: ExteriorConfig,
    },
    /// Swap annealing directly on permutations.
    Permutation { config: PermAnnealConfig },
    /// Enumeration; sub-QAP size must be at most 10.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompConfig {
    pub partition: PartitionMethod,
    pub matching: MatchMode,
    pub sub_solver: SubSolver,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompOutcome {
    pub perm: Vec<usize>,
    pub energy: f64,
    pub plan: DecompositionPlan,
    pub sub_energies: Vec<f64>,
    /// Every sub-QAP solve produced a permutation without repair.
    pub all_feasible: bool,
}

/// Partition, match, build sub-QAPs and solve them.
pub fn plan_decomposition(inst: &QapInstance, k: usize, cfg: &DecompConfig) -> Result<DecompositionPlan> {
    let items = partition_items(inst.flow(), k, &cfg.partition, cfg.seed)?;
    let locs = partition_locations(inst.dist(), k, &cfg.partition, cfg.seed)?;
    let matching = match_subsets(inst, &items, &locs, cfg.matching, child_seed(cfg.seed, "matching", 0))?;
    let sub_qaps = build_sub_qaps(inst, &items, &locs, &matching)?;
    let sub_seeds = (0..k).map(|g| child_seed(cfg.seed, "subqap", g as u64)).collect();
    Ok(DecompositionPlan { item_partition: items, location_partition: locs, matching, sub_seeds, sub_qaps })
}

pub fn solve_sub_qap(sq: &SubQap, solver: &SubSolver, seed: u64) -> Result<(Vec<usize>, f64, bool)> {
    match solver {
        SubSolver::Qubo { solver, exterior } => {
            let o = exterior_penalty_solve(&sq.inst, exterior, solver, seed)?;
            Ok((o.perm, o.energy, o.feasible))
        }
        SubSolver::Permutation { config } => {
            let cfg = PermAnnealConfig { seed, ..config.clone() };
            let r = permutation_annealer(&mut QapObjective(&sq.inst), &cfg, None, false)?;
            Ok((r.perm, r.energy, true))
        }
        SubSolver::Exact => {
            let (p, e) = brute_force_qap(&sq.inst, MAX_QAP_N)?;
            Ok((p, e, true))
        }
    }
}

/// Solve every sub-QAP of a plan and combine into a global assignment.
pub fn solve_plan(inst: &QapInstance, plan: DecompositionPlan, solver: &SubSolver) -> Result<DecompOutcome> {
    let results: Vec<(Vec<usize>, f64, bool)> = plan
        .sub_qaps
        .par_iter()
        .zip(plan.sub_seeds.par_iter())
        .map(|(sq, &seed)| solve_sub_qap(sq, solver, seed))
        .collect::<Result<_>>()?;
    let local: Vec<Vec<usize>> = results.iter().map(|r| r.0.clone()).collect();
    let perm = combine_subsolutions(inst.n(), &plan.sub_qaps, &local);
    debug_assert!(crate::formulations::is_permutation(&perm));
    Ok(DecompOutcome {
        energy: inst.objective(&perm),
        sub_energies: results.iter().map(|r| r.1).collect(),
        all_feasible: results.iter().all(|r| r.2),
        perm,
        plan,
    })
}

pub fn solve_decomposed(inst: &QapInstance, k: usize, cfg: &DecompConfig) -> Result<DecompOutcome> {
    let plan = plan_decomposition(inst, k, cfg)?;
    solve_plan(inst, plan, &cfg.sub_solver)
}

/// Objective contribution of pairs whose facilities lie in different item subsets.
pub fn cross_residual(inst: &QapInstance, items: &Partition, perm: &[usize]) -> f64 {
    let n = inst.n();
    let mut r = 0.0;
    for i in 0..n {
        for j in 0..n {
            if items.assignment[i] != items.assignment[j] {
                r += inst.flow().get(i, j) * inst.dist().get(perm[i], perm[j]);
            }
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCheck {
    pub is_block_constant: bool,
    pub delta: Option<f64>,
    pub m: Option<f64>,
}

/// Whether off-diagonal distances take one value within columns and one across.
pub fn verify_block_structure(dist: &Matrix, column_of: &[usize]) -> BlockCheck {
    let n = dist.rows();
    let (mut delta, mut m): (Option<f64>, Option<f64>) = (None, None);
    let no = BlockCheck { is_block_constant: false, delta: None, m: None };
    if column_of.len() != n || !dist.is_square() {
        return no;
    }
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let v = dist.get(a, b);
            let slot = if column_of[a] == column_of[b] { &mut delta } else { &mut m };
            match *slot {
                None => *slot = Some(v),
                Some(x) if x == v => {}
                Some(_) => return no,
            }
        }
    }
    BlockCheck { is_block_constant: true, delta, m }
}
