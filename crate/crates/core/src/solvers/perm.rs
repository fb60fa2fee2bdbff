use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::QapInstance;
use crate::rng::stream;

/// Objective over permutations with incremental pairwise-swap evaluation.
pub trait PermutationObjective {
    fn size(&self) -> usize;
    /// Full evaluation; also resets any cached state to `perm`.
    fn evaluate(&mut self, perm: &[usize]) -> f64;
    /// Change caused by exchanging positions a and b of `perm`.
    fn swap_delta(&mut self, perm: &[usize], a: usize, b: usize) -> f64;
    /// Called after an accepted swap; `perm` already holds the swapped values.
    fn commit_swap(&mut self, _perm: &[usize], _a: usize, _b: usize) {}
}

pub struct QapObjective<'a>(pub &'a QapInstance);

impl PermutationObjective for QapObjective<'_> {
    fn size(&self) -> usize {
        self.0.n()
    }

    fn evaluate(&mut self, perm: &[usize]) -> f64 {
        self.0.objective(perm)
    }

    fn swap_delta(&mut self, perm: &[usize], a: usize, b: usize) -> f64 {
        self.0.swap_delta(perm, a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TempSchedule {
    Geometric { t0: f64, t_end: f64 },
    /// t0 = mean |delta| of sampled swaps, t_end = t0 / 1000.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermAnnealConfig {
    pub iterations: u64,
    pub temperature_schedule: TempSchedule,
    pub seed: u64,
}

impl Default for PermAnnealConfig {
    fn default() -> Self {
        PermAnnealConfig { iterations: 100_000, temperature_schedule: TempSchedule::Auto, seed: 1234 }
    }
}

impl PermAnnealConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Parameter("iterations must be >= 1".into()));
        }
        if let TempSchedule::Geometric { t0, t_end } = self.temperature_schedule {
            if !(t_end > 0.0 && t0 >= t_end && t0.is_finite()) {
                return Err(Error::Parameter(format!("temperatures need t0 >= t_end > 0, got ({t0}, {t_end})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermResult {
    pub perm: Vec<usize>,
    pub energy: f64,
    /// (iteration, best-so-far) on every improvement, when requested.
    pub trace: Vec<(u64, f64)>,
}

/// Swap-move simulated annealing over permutations; returns the best-seen permutation.
pub fn permutation_annealer<O: PermutationObjective>(
    obj: &mut O,
    cfg: &PermAnnealConfig,
    initial: Option<&[usize]>,
    trace: bool,
) -> Result<PermResult> {
    cfg.validate()?;
    let n = obj.size();
    let mut rng = stream(cfg.seed, "perm-anneal", 0);
    let mut perm: Vec<usize> = match initial {
        Some(p) => {
            if p.len() != n || !crate::formulations::is_permutation(p) {
                return Err(Error::Domain("initial state is not a permutation of the right size".into()));
            }
            p.to_vec()
        }
        None => {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        }
    };
    let mut e = obj.evaluate(&perm);
    let mut best = perm.clone();
    let mut best_e = e;
    let mut tr = Vec::new();
    if trace {
        tr.push((0, best_e));
    }
    if n < 2 {
        return Ok(PermResult { perm: best, energy: best_e, trace: tr });
    }
    let (t0, t_end) = match cfg.temperature_schedule {
        TempSchedule::Geometric { t0, t_end } => (t0, t_end),
        TempSchedule::Auto => {
            let mut probe = stream(cfg.seed, "perm-anneal-probe", 0);
            let (mut sum, mut cnt) = (0.0, 0usize);
            for _ in 0..200 {
                let (a, b) = two_distinct(n, &mut probe);
                let d = obj.swap_delta(&perm, a, b).abs();
                if d > 0.0 {
                    sum += d;
                    cnt += 1;
                }
            }
            let t0 = if cnt == 0 { 1.0 } else { sum / cnt as f64 };
            (t0, t0 * 1e-3)
        }
    };
    let ratio = if cfg.iterations > 1 { (t_end / t0).ln() / (cfg.iterations - 1) as f64 } else { 0.0 };
    for it in 0..cfg.iterations {
        let t = t0 * (ratio * it as f64).exp();
        let (a, b) = two_distinct(n, &mut rng);
        let d = obj.swap_delta(&perm, a, b);
        if d <= 0.0 || rng.random::<f64>() < (-d / t).exp() {
            perm.swap(a, b);
            obj.commit_swap(&perm, a, b);
            e += d;
            if e < best_e {
                best_e = e;
                best.copy_from_slice(&perm);
                if trace {
                    tr.push((it + 1, best_e));
                }
            }
        }
    }
    let energy = obj.evaluate(&best);
    Ok(PermResult { perm: best, energy, trace: tr })
}

fn two_distinct(n: usize, rng: &mut impl Rng) -> (usize, usize) {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_tinyqap;
    use crate::matrix::Matrix;
    use crate::solvers::brute_force_qap;

    #[test]
    fn two_facility_reaches_optimum() {
        let inst = QapInstance::new(
            Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 2.0]]).unwrap(),
            Matrix::from_rows(&[vec![5.0, 3.0], vec![3.0, 1.0]]).unwrap(),
        )
        .unwrap();
        let (_, opt) = brute_force_qap(&inst, 10).unwrap();
        let cfg = PermAnnealConfig { iterations: 10, ..Default::default() };
        let r = permutation_annealer(&mut QapObjective(&inst), &cfg, Some(&[0, 1]), false).unwrap();
        assert_eq!(r.energy, opt);
    }

    #[test]
    fn swap_delta_matches_recompute() {
        let inst = gen_tinyqap(7, 3).unwrap();
        let mut rng = stream(5, "t", 0);
        for _ in 0..50 {
            let mut p: Vec<usize> = (0..7).collect();
            p.shuffle(&mut rng);
            let (a, b) = two_distinct(7, &mut rng);
            let before = inst.objective(&p);
            let d = inst.swap_delta(&p, a, b);
            p.swap(a, b);
            assert!((inst.objective(&p) - before - d).abs() < 1e-9);
        }
    }

    struct Checked<'a> {
        inner: QapObjective<'a>,
    }

    impl PermutationObjective for Checked<'_> {
        fn size(&self) -> usize {
            self.inner.size()
        }
        fn evaluate(&mut self, perm: &[usize]) -> f64 {
            assert!(crate::formulations::is_permutation(perm));
            self.inner.evaluate(perm)
        }
        fn swap_delta(&mut self, perm: &[usize], a: usize, b: usize) -> f64 {
            self.inner.swap_delta(perm, a, b)
        }
        fn commit_swap(&mut self, perm: &[usize], _a: usize, _b: usize) {
            let x = crate::formulations::encode_permutation(perm);
            assert_eq!(crate::formulations::qap_violations(perm.len(), &x).unwrap(), 0);
        }
    }

    #[test]
    fn visited_states_are_feasible_and_best_is_monotone() {
        let inst = gen_tinyqap(6, 2).unwrap();
        let mut obj = Checked { inner: QapObjective(&inst) };
        let r = permutation_annealer(&mut obj, &PermAnnealConfig { iterations: 2000, ..Default::default() }, None, true).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn rejects_bad_config() {
        let inst = gen_tinyqap(3, 2).unwrap();
        let cfg = PermAnnealConfig { temperature_schedule: TempSchedule::Geometric { t0: 1.0, t_end: 2.0 }, ..Default::default() };
        assert!(permutation_annealer(&mut QapObjective(&inst), &cfg, None, false).is_err());
        let cfg = PermAnnealConfig { iterations: 0, ..Default::default() };
        assert!(permutation_annealer(&mut QapObjective(&inst), &cfg, None, false).is_err());
    }
}
