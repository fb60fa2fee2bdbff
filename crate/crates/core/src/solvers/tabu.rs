use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_initial, check_nonempty, random_bits, RunOptions, SolveResult, TracePoint};
use crate::error::{Error, Result};
use crate::formulations::QuboProblem;
use crate::qubo::SampleSet;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabuConfig {
    pub tenure: usize,
    pub max_iterations: u64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for TabuConfig {
    fn default() -> Self {
        TabuConfig { tenure: 10, max_iterations: 10_000, restarts: 10, seed: 1234 }
    }
}

impl TabuConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tenure == 0 || self.restarts == 0 {
            return Err(Error::Parameter("tenure and restarts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Best admissible single flip per iteration with recency tabu and aspiration.
pub fn tabu_search(p: &QuboProblem, cfg: &TabuConfig) -> Result<SampleSet> {
    Ok(run(p, cfg, &RunOptions::default())?.samples)
}

pub(crate) fn run(p: &QuboProblem, cfg: &TabuConfig, opts: &RunOptions) -> Result<SolveResult> {
    cfg.validate()?;
    check_nonempty(&p.qubo)?;
    check_initial(&p.qubo, opts)?;
    let start = Instant::now();
    let q = &p.qubo;
    let n = q.n();
    let tenure = cfg.tenure.min(n.saturating_sub(1)) as u64;
    let runs: Vec<(Vec<u8>, Vec<TracePoint>)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, "tabu", r as u64);
            let mut x = match &opts.initial {
                Some(x0) => x0.clone(),
                None => random_bits(n, &mut rng),
            };
            let mut deltas = vec![0.0; n];
            q.all_deltas(&x, &mut deltas);
            let mut e = q.energy_unchecked(&x);
            let mut best = x.clone();
            let mut best_e = e;
            let mut trace = Vec::new();
            if opts.trace {
                trace.push(TracePoint { unit: r, iteration: 0, best_energy: best_e });
            }
            let mut tabu_until = vec![0u64; n];
            for it in 1..=cfg.max_iterations {
                let mut pick: Option<(usize, f64)> = None;
                for k in 0..n {
                    let d = deltas[k];
                    let admissible = tabu_until[k] < it || e + d < best_e;
                    if admissible && pick.is_none_or(|(_, pd)| d < pd) {
                        pick = Some((k, d));
                    }
                }
                let Some((k, d)) = pick else { continue };
                x[k] ^= 1;
                e += d;
                q.update_deltas(&x, k, &mut deltas);
                tabu_until[k] = it + tenure;
                if e < best_e {
                    best_e = e;
                    best.copy_from_slice(&x);
                    if opts.trace {
                        trace.push(TracePoint { unit: r, iteration: it, best_energy: best_e });
                    }
                }
            }
            (best, trace)
        })
        .collect();
    let mut bits = Vec::new();
    let mut trace = Vec::new();
    for (b, t) in runs {
        bits.push(b);
        trace.extend(t);
    }
    let mut samples = p.sample_set(bits, super::SolverConfig::Tabu(cfg.clone()).label())?;
    samples.solve_seconds = start.elapsed().as_secs_f64();
    Ok(SolveResult { samples, trace })
}
