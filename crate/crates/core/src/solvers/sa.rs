use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{auto_beta_range, check_initial, check_nonempty, geometric, metropolis, random_bits, RunOptions, SolveResult, TracePoint};
use crate::error::{Error, Result};
use crate::formulations::QuboProblem;
use crate::qubo::SampleSet;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaRange {
    Auto,
    Explicit { hot: f64, cold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaSchedule {
    Geometric,
    /// One sweep per listed beta; overrides `sweeps` and `beta_range`.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaConfig {
    pub num_reads: usize,
    pub sweeps: usize,
    pub beta_schedule: BetaSchedule,
    pub beta_range: BetaRange,
    pub seed: u64,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig { num_reads: 100, sweeps: 1000, beta_schedule: BetaSchedule::Geometric, beta_range: BetaRange::Auto, seed: 1234 }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_reads == 0 {
            return Err(Error::Parameter("num_reads must be >= 1".into()));
        }
        match &self.beta_schedule {
            BetaSchedule::Geometric => {
                if self.sweeps == 0 {
                    return Err(Error::Parameter("sweeps must be >= 1".into()));
                }
            }
            BetaSchedule::Custom(b) => {
                if b.is_empty() || b.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(Error::Parameter("custom beta schedule must be non-empty and non-negative".into()));
                }
            }
        }
        if let BetaRange::Explicit { hot, cold } = self.beta_range {
            if !(hot > 0.0 && hot < cold && cold.is_finite()) {
                return Err(Error::Parameter(format!("beta range needs 0 < hot < cold, got ({hot}, {cold})")));
            }
        }
        Ok(())
    }

    pub fn betas(&self, p: &QuboProblem) -> Vec<f64> {
        match &self.beta_schedule {
            BetaSchedule::Custom(b) => b.clone(),
            BetaSchedule::Geometric => {
                let (hot, cold) = match self.beta_range {
                    BetaRange::Auto => auto_beta_range(&p.qubo),
                    BetaRange::Explicit { hot, cold } => (hot, cold),
                };
                geometric(hot, cold, self.sweeps)
            }
        }
    }
}

/// Independent Metropolis reads along a geometric beta schedule.
pub fn simulated_annealing(p: &QuboProblem, cfg: &SaConfig) -> Result<SampleSet> {
    Ok(run(p, cfg, &RunOptions::default())?.samples)
}

pub(crate) fn run(p: &QuboProblem, cfg: &SaConfig, opts: &RunOptions) -> Result<SolveResult> {
    cfg.validate()?;
    check_nonempty(&p.qubo)?;
    check_initial(&p.qubo, opts)?;
    let start = Instant::now();
    let betas = cfg.betas(p);
    let q = &p.qubo;
    let n = q.n();
    let reads: Vec<(Vec<u8>, Vec<TracePoint>)> = (0..cfg.num_reads)
        .into_par_iter()
        .map(|read| {
            let mut rng = stream(cfg.seed, "sa", read as u64);
            let mut x = match &opts.initial {
                Some(x0) => x0.clone(),
                None => random_bits(n, &mut rng),
            };
            let mut deltas = vec![0.0; n];
            q.all_deltas(&x, &mut deltas);
            let mut trace = Vec::new();
            let mut e = q.energy_unchecked(&x);
            let mut best = e;
            if opts.trace {
                trace.push(TracePoint { unit: read, iteration: 0, best_energy: best });
            }
            for (s, &beta) in betas.iter().enumerate() {
                for k in 0..n {
                    let d = deltas[k];
                    if metropolis(d, beta, &mut rng) {
                        x[k] ^= 1;
                        e += d;
                        q.update_deltas(&x, k, &mut deltas);
                    }
                }
                if opts.trace && e < best {
                    best = e;
                    trace.push(TracePoint { unit: read, iteration: s as u64 + 1, best_energy: best });
                }
            }
            (x, trace)
        })
        .collect();
    let mut trace = Vec::new();
    let mut bits = Vec::with_capacity(reads.len());
    for (x, t) in reads {
        bits.push(x);
        trace.extend(t);
    }
    let label = super::SolverConfig::Sa(cfg.clone()).label();
    let mut samples = p.sample_set(bits, label)?;
    samples.solve_seconds = start.elapsed().as_secs_f64();
    Ok(SolveResult { samples, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::{mvc_to_qubo, Penalty, WeightedGraph};
    use crate::qubo::QuboMatrix;

    #[test]
    fn single_basin() {
        let p = QuboProblem::raw(QuboMatrix::from_terms(1, 0.0, [(0, 0, 5.0)]).unwrap());
        let cfg = SaConfig { num_reads: 20, sweeps: 10, ..Default::default() };
        let s = simulated_annealing(&p, &cfg).unwrap();
        assert!(s.samples.iter().all(|x| x.bits == vec![0] && x.energy == 0.0));
    }

    #[test]
    fn mvc_path() {
        let g = WeightedGraph::unweighted(3, &[(0, 1), (1, 2)]).unwrap();
        let p = mvc_to_qubo(&g, Penalty::Value(2.0)).unwrap();
        let s = simulated_annealing(&p, &SaConfig { num_reads: 10, sweeps: 100, ..Default::default() }).unwrap();
        assert_eq!(s.best().unwrap().energy, 1.0);
    }

    #[test]
    fn rejects_bad_config() {
        let p = QuboProblem::raw(QuboMatrix::from_terms(1, 0.0, [(0, 0, 1.0)]).unwrap());
        for cfg in [
            SaConfig { num_reads: 0, ..Default::default() },
            SaConfig { sweeps: 0, ..Default::default() },
            SaConfig { beta_range: BetaRange::Explicit { hot: 2.0, cold: 1.0 }, ..Default::default() },
            SaConfig { beta_schedule: BetaSchedule::Custom(vec![]), ..Default::default() },
        ] {
            assert!(matches!(simulated_annealing(&p, &cfg), Err(Error::Parameter(_))));
        }
        let empty = QuboProblem::raw(QuboMatrix::from_terms(0, 0.0, []).unwrap());
        assert!(matches!(simulated_annealing(&empty, &SaConfig::default()), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn trace_is_monotone() {
        let q = QuboMatrix::from_terms(3, 0.0, [(0, 0, -1.0), (0, 1, 2.0), (1, 2, -3.0), (2, 2, 1.0)]).unwrap();
        let p = QuboProblem::raw(q);
        let r = run(&p, &SaConfig { num_reads: 4, sweeps: 50, ..Default::default() }, &RunOptions { initial: None, trace: true }).unwrap();
        for unit in 0..4 {
            let t: Vec<f64> = r.trace.iter().filter(|t| t.unit == unit).map(|t| t.best_energy).collect();
            assert!(t.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
