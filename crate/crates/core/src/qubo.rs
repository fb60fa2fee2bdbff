//! QUBO data model, energy evaluation, samples and sample-set metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{parse_err, Error, Result};

/// Sparse upper-triangular QUBO with a constant offset.
///
/// Built through [`QuboBuilder`]; immutable afterwards. Explicit zeros are
/// dropped at build time so they evaluate exactly like absent pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboMatrix {
    n: usize,
    offset: f64,
    linear: Vec<f64>,
    quadratic: Vec<(usize, usize, f64)>,
    // symmetric CSR adjacency of the quadratic part
    row_ptr: Vec<usize>,
    nbr: Vec<usize>,
    weight: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct QuboBuilder {
    n: usize,
    offset: f64,
    coeffs: BTreeMap<(usize, usize), f64>,
}

impl QuboBuilder {
    pub fn new(n: usize) -> Self {
        QuboBuilder { n, offset: 0.0, coeffs: BTreeMap::new() }
    }

    /// Accumulate `v` into the (i,j) slot; (j,i) folds onto (i,j).
    pub fn add(&mut self, i: usize, j: usize, v: f64) -> &mut Self {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        assert!(b < self.n, "term ({i},{j}) out of range for n={}", self.n);
        *self.coeffs.entry((a, b)).or_insert(0.0) += v;
        self
    }

    pub fn add_offset(&mut self, v: f64) -> &mut Self {
        self.offset += v;
        self
    }

    pub fn build(&self) -> QuboMatrix {
        QuboMatrix::from_terms(self.n, self.offset, self.coeffs.iter().map(|(&(i, j), &v)| (i, j, v)))
            .expect("builder keeps indices in range")
    }
}

impl QuboMatrix {
    /// Construct from explicit upper-triangular terms. Repeated keys accumulate.
    pub fn from_terms<I>(n: usize, offset: f64, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in terms {
            if i > j || j >= n {
                return Err(Error::Domain(format!("term ({i},{j}) violates 0 <= i <= j < {n}")));
            }
            if !v.is_finite() {
                return Err(Error::Domain(format!("non-finite coefficient at ({i},{j})")));
            }
            *map.entry((i, j)).or_insert(0.0) += v;
        }
        let mut linear = vec![0.0; n];
        let mut quadratic = Vec::new();
        let mut degree = vec![0usize; n];
        for (&(i, j), &v) in &map {
            if v == 0.0 {
                continue;
            }
            if i == j {
                linear[i] = v;
            } else {
                quadratic.push((i, j, v));
                degree[i] += 1;
                degree[j] += 1;
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + degree[i];
        }
        let mut fill = row_ptr[..n].to_vec();
        let mut nbr = vec![0usize; row_ptr[n]];
        let mut weight = vec![0.0; row_ptr[n]];
        for &(i, j, v) in &quadratic {
            nbr[fill[i]] = j;
            weight[fill[i]] = v;
            fill[i] += 1;
            nbr[fill[j]] = i;
            weight[fill[j]] = v;
            fill[j] += 1;
        }
        Ok(QuboMatrix { n, offset, linear, quadratic, row_ptr, nbr, weight })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    /// Off-diagonal terms (i < j), sorted.
    pub fn quadratic(&self) -> &[(usize, usize, f64)] {
        &self.quadratic
    }

    pub fn num_quadratic(&self) -> usize {
        self.quadratic.len()
    }

    /// Coefficient stored at (i,j) after folding; zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        if a == b {
            return self.linear.get(a).copied().unwrap_or(0.0);
        }
        self.neighbors(a).find(|&(k, _)| k == b).map(|(_, w)| w).unwrap_or(0.0)
    }

    /// All nonzero terms as (i, j, coeff) with i <= j, in key order.
    pub fn terms(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<(usize, usize, f64)> =
            self.linear.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (i, i, v)).collect();
        out.extend_from_slice(&self.quadratic);
        out.sort_by_key(|a| (a.0, a.1));
        out
    }

    pub fn neighbors(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[k]..self.row_ptr[k + 1];
        self.nbr[r.clone()].iter().copied().zip(self.weight[r].iter().copied())
    }

    pub fn degree(&self, k: usize) -> usize {
        self.row_ptr[k + 1] - self.row_ptr[k]
    }

    pub fn check_bits(&self, x: &[u8]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: x.len() });
        }
        if let Some(p) = x.iter().position(|&b| b > 1) {
            return Err(Error::Domain(format!("entry {p} is {} (not binary)", x[p])));
        }
        Ok(())
    }

    pub fn energy(&self, x: &[u8]) -> Result<f64> {
        self.check_bits(x)?;
        Ok(self.energy_unchecked(x))
    }

    pub(crate) fn energy_unchecked(&self, x: &[u8]) -> f64 {
        let mut e = self.offset;
        for (i, &v) in self.linear.iter().enumerate() {
            if x[i] == 1 {
                e += v;
            }
        }
        for &(i, j, v) in &self.quadratic {
            if x[i] == 1 && x[j] == 1 {
                e += v;
            }
        }
        e
    }

    /// Local field g_k = Q_kk + sum_j Q_kj x_j.
    pub fn local_field(&self, x: &[u8], k: usize) -> f64 {
        let mut g = self.linear[k];
        for (j, w) in self.neighbors(k) {
            if x[j] == 1 {
                g += w;
            }
        }
        g
    }

    /// Energy change of flipping bit k, in O(degree(k)).
    pub fn delta_energy(&self, x: &[u8], k: usize) -> Result<f64> {
        if k >= self.n {
            return Err(Error::Index { index: k, len: self.n });
        }
        if x.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: x.len() });
        }
        Ok(self.delta_unchecked(x, k))
    }

    #[inline]
    pub(crate) fn delta_unchecked(&self, x: &[u8], k: usize) -> f64 {
        let g = self.local_field(x, k);
        if x[k] == 0 {
            g
        } else {
            -g
        }
    }

    /// Fill `out` with the flip delta of every variable.
    pub fn all_deltas(&self, x: &[u8], out: &mut [f64]) {
        for k in 0..self.n {
            out[k] = self.delta_unchecked(x, k);
        }
    }

    /// Update cached deltas after bit m was flipped (x already holds the new value).
    #[inline]
    pub fn update_deltas(&self, x: &[u8], m: usize, deltas: &mut [f64]) {
        let s = if x[m] == 1 { 1.0 } else { -1.0 };
        deltas[m] = -deltas[m];
        let r = self.row_ptr[m]..self.row_ptr[m + 1];
        for (&j, &w) in self.nbr[r.clone()].iter().zip(&self.weight[r]) {
            if x[j] == 0 {
                deltas[j] += w * s;
            } else {
                deltas[j] -= w * s;
            }
        }
    }

    /// Largest possible single-flip |delta| bound and smallest nonzero |coefficient|.
    pub fn coefficient_scale(&self) -> CoefficientScale {
        let mut max_flip: f64 = 0.0;
        let mut min_nz = f64::INFINITY;
        let mut sum = 0.0;
        let mut count = 0usize;
        for k in 0..self.n {
            let mut b = self.linear[k].abs();
            for (_, w) in self.neighbors(k) {
                b += w.abs();
            }
            max_flip = max_flip.max(b);
        }
        for v in self.linear.iter().copied().chain(self.quadratic.iter().map(|t| t.2)) {
            if v != 0.0 {
                min_nz = min_nz.min(v.abs());
                sum += v.abs();
                count += 1;
            }
        }
        CoefficientScale {
            max_flip,
            min_nonzero: if count == 0 { 0.0 } else { min_nz },
            mean_abs: if count == 0 { 0.0 } else { sum / count as f64 },
            max_abs: self
                .linear
                .iter()
                .copied()
                .chain(self.quadratic.iter().map(|t| t.2))
                .fold(0.0, |m: f64, v| m.max(v.abs())),
        }
    }

    /// Text form: `n <count> offset <real>` then `i j coeff` per nonzero term.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "n {} offset {}", self.n, fmt_f64(self.offset)).unwrap();
        for (i, j, v) in self.terms() {
            writeln!(s, "{i} {j} {}", fmt_f64(v)).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        let (ln, header) = lines.next().ok_or(Error::EmptyInput("qubo text"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "n" || h[2] != "offset" {
            return Err(parse_err(ln + 1, "expected `n <count> offset <real>`"));
        }
        let n: usize = h[1].parse().map_err(|_| parse_err(ln + 1, "bad variable count"))?;
        let offset: f64 = h[3].parse().map_err(|_| parse_err(ln + 1, "bad offset"))?;
        let mut terms = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err(ln + 1, "expected `i j coeff`"));
            }
            let i: usize = f[0].parse().map_err(|_| parse_err(ln + 1, "bad index"))?;
            let j: usize = f[1].parse().map_err(|_| parse_err(ln + 1, "bad index"))?;
            let v: f64 = f[2].parse().map_err(|_| parse_err(ln + 1, "bad coefficient"))?;
            if i > j || j >= n {
                return Err(parse_err(ln + 1, format!("term ({i},{j}) out of range")));
            }
            if !seen.insert((i, j)) {
                return Err(parse_err(ln + 1, format!("duplicate term ({i},{j})")));
            }
            terms.push((i, j, v));
        }
        QuboMatrix::from_terms(n, offset, terms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientScale {
    pub max_flip: f64,
    pub min_nonzero: f64,
    pub mean_abs: f64,
    pub max_abs: f64,
}

/// Shortest round-trip float text; integral values print without a fraction.
pub fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySample {
    pub bits: Vec<u8>,
    /// QUBO energy including the offset.
    pub energy: f64,
    pub feasible: bool,
    pub violations: usize,
}

impl BinarySample {
    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<BinarySample>,
    pub solve_seconds: f64,
    pub solver_label: String,
    pub total_constraints: usize,
    /// Min: reported value = energy; Max: reported value = -energy.
    pub sense: Sense,
}

impl SampleSet {
    pub fn new(samples: Vec<BinarySample>, solver_label: impl Into<String>, total_constraints: usize, sense: Sense) -> Result<Self> {
        if let Some(first) = samples.first() {
            let n = first.bits.len();
            if let Some(bad) = samples.iter().find(|s| s.bits.len() != n) {
                return Err(Error::Dimension { expected: n, got: bad.bits.len() });
            }
        }
        Ok(SampleSet { samples, solve_seconds: 0.0, solver_label: solver_label.into(), total_constraints, sense })
    }

    pub fn reported(&self, s: &BinarySample) -> f64 {
        match self.sense {
            Sense::Min => s.energy,
            Sense::Max => -s.energy,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample with the best reported value (first on ties).
    pub fn best(&self) -> Option<&BinarySample> {
        let mut best: Option<&BinarySample> = None;
        for s in &self.samples {
            match best {
                None => best = Some(s),
                Some(b) if s.energy < b.energy => best = Some(s),
                _ => {}
            }
        }
        best
    }

    /// Best feasible sample by QUBO energy, falling back to the overall best.
    pub fn best_feasible(&self) -> Option<&BinarySample> {
        self.samples
            .iter()
            .filter(|s| s.feasible)
            .fold(None, |b: Option<&BinarySample>, s| match b {
                Some(b) if b.energy <= s.energy => Some(b),
                _ => Some(s),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub count: usize,
    pub feasible_count: usize,
    pub mean_energy: f64,
    pub best_energy: f64,
    pub std_energy: f64,
    pub p_f: f64,
    pub mean_violation_pct: Option<f64>,
    /// Statistics were taken over all samples because none was feasible.
    pub none_feasible: bool,
    pub normalized_mean: Option<f64>,
    pub normalized_best: Option<f64>,
}

/// Metrics over the reported values of a sample set.
///
/// `reference_energy` normalizes mean and best when given; it must be nonzero.
pub fn summarize(s: &SampleSet, reference_energy: Option<f64>, sense: Sense) -> Result<MetricsSummary> {
    if s.samples.is_empty() {
        return Err(Error::EmptyInput("sample set"));
    }
    if reference_energy == Some(0.0) {
        return Err(Error::Domain("reference energy must be nonzero for normalization".into()));
    }
    let count = s.samples.len();
    let feasible: Vec<f64> = s.samples.iter().filter(|x| x.feasible).map(|x| s.reported(x)).collect();
    let feasible_count = feasible.len();
    let none_feasible = feasible_count == 0;
    let values: Vec<f64> = if none_feasible { s.samples.iter().map(|x| s.reported(x)).collect() } else { feasible };
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
    let best = match sense {
        Sense::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        Sense::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    let mean_violation_pct = if s.total_constraints > 0 {
        let total: f64 = s
            .samples
            .iter()
            .map(|x| violation_percentage(x.violations, s.total_constraints).expect("nonzero constraints"))
            .sum();
        Some(total / count as f64)
    } else {
        None
    };
    Ok(MetricsSummary {
        count,
        feasible_count,
        mean_energy: mean,
        best_energy: best,
        std_energy: var.sqrt(),
        p_f: p_f(feasible_count, count),
        mean_violation_pct,
        none_feasible,
        normalized_mean: reference_energy.map(|r| mean / r),
        normalized_best: reference_energy.map(|r| best / r),
    })
}

/// Probability of feasibility as a percentage.
pub fn p_f(feasible: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * feasible as f64 / total as f64
    }
}

pub fn violation_percentage(violations: usize, total_constraints: usize) -> Result<f64> {
    if total_constraints == 0 {
        return Err(Error::Domain("unconstrained problem has no violation percentage".into()));
    }
    Ok(100.0 * violations as f64 / total_constraints as f64)
}

pub fn pseudo_energy(objective_energy: f64, penalty_energy: f64) -> f64 {
    objective_energy + penalty_energy
}
