//! QUBO samplers, exhaustive oracles and the permutation-space annealer.

mod oracle;
mod perm;
mod pt;
mod random;
mod sa;
mod tabu;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use oracle::{brute_force_qap, brute_force_qubo, enumerate_minimizers, enumerate_qap_optima, Minimizers, MAX_QAP_N, MAX_QUBO_N};
pub use perm::{permutation_annealer, PermAnnealConfig, PermResult, PermutationObjective, QapObjective, TempSchedule};
pub use pt::{parallel_tempering, parallel_trial_fixed_beta, BetaLadder, PtConfig};
pub use random::{random_permutation, random_sampler};
pub use sa::{simulated_annealing, BetaRange, BetaSchedule, SaConfig};
pub use tabu::{tabu_search, TabuConfig};

use crate::error::{Error, Result};
use crate::formulations::QuboProblem;
use crate::qubo::{QuboMatrix, SampleSet};

/// One best-so-far record: `unit` is the read, replica or restart index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub unit: usize,
    pub iteration: u64,
    pub best_energy: f64,
}

/// Per-run options shared by all samplers.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Warm-start configuration for every read/replica/restart.
    pub initial: Option<Vec<u8>>,
    pub trace: bool,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub samples: SampleSet,
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SolverConfig {
    Sa(SaConfig),
    Pt(PtConfig),
    Tabu(TabuConfig),
    Random { reads: usize, seed: u64 },
    BruteForce,
}

impl SolverConfig {
    pub fn label(&self) -> String {
        match self {
            SolverConfig::Sa(c) => format!("sa(reads={},sweeps={})", c.num_reads, c.sweeps),
            SolverConfig::Pt(c) => format!("pt(replicas={},iterations={})", c.replicas, c.iterations),
            SolverConfig::Tabu(c) => format!("tabu(tenure={},iterations={},restarts={})", c.tenure, c.max_iterations, c.restarts),
            SolverConfig::Random { reads, .. } => format!("random(reads={reads})"),
            SolverConfig::BruteForce => "brute_force".into(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            SolverConfig::Sa(c) => Some(c.seed),
            SolverConfig::Pt(c) => Some(c.seed),
            SolverConfig::Tabu(c) => Some(c.seed),
            SolverConfig::Random { seed, .. } => Some(*seed),
            SolverConfig::BruteForce => None,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        match &mut c {
            SolverConfig::Sa(x) => x.seed = seed,
            SolverConfig::Pt(x) => x.seed = seed,
            SolverConfig::Tabu(x) => x.seed = seed,
            SolverConfig::Random { seed: s, .. } => *s = seed,
            SolverConfig::BruteForce => {}
        }
        c
    }
}

/// Run any configured sampler.
pub fn solve(p: &QuboProblem, cfg: &SolverConfig, opts: &RunOptions) -> Result<SolveResult> {
    match cfg {
        SolverConfig::Sa(c) => sa::run(p, c, opts),
        SolverConfig::Pt(c) => pt::run(p, c, opts),
        SolverConfig::Tabu(c) => tabu::run(p, c, opts),
        SolverConfig::Random { reads, seed } => Ok(SolveResult { samples: random_sampler(p, *reads, *seed)?, trace: vec![] }),
        SolverConfig::BruteForce => {
            let start = Instant::now();
            let (x, _) = brute_force_qubo(&p.qubo, MAX_QUBO_N)?;
            let mut s = p.sample_set(vec![x], cfg.label())?;
            s.solve_seconds = start.elapsed().as_secs_f64();
            Ok(SolveResult { samples: s, trace: vec![] })
        }
    }
}

pub(crate) fn check_nonempty(q: &QuboMatrix) -> Result<()> {
    if q.n() == 0 {
        return Err(Error::EmptyInput("QUBO with zero variables"));
    }
    Ok(())
}

pub(crate) fn check_initial(q: &QuboMatrix, opts: &RunOptions) -> Result<()> {
    if let Some(x) = &opts.initial {
        q.check_bits(x)?;
    }
    Ok(())
}

/// Automatic (hot, cold) inverse temperatures from coefficient magnitudes.
pub fn auto_beta_range(q: &QuboMatrix) -> (f64, f64) {
    let s = q.coefficient_scale();
    if s.max_flip == 0.0 {
        return (0.1, 1.0);
    }
    let hot = std::f64::consts::LN_2 / s.max_flip;
    let cold = 100f64.ln() / s.min_nonzero;
    if cold > hot {
        (hot, cold)
    } else {
        (hot, hot * 10.0)
    }
}

/// `count` values from `hot` to `cold`, evenly spaced in log scale.
pub fn geometric(hot: f64, cold: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![cold],
        _ => {
            let r = (cold / hot).ln() / (count - 1) as f64;
            (0..count).map(|i| if i + 1 == count { cold } else { hot * (r * i as f64).exp() }).collect()
        }
    }
}

pub(crate) fn random_bits(n: usize, rng: &mut impl rand::Rng) -> Vec<u8> {
    (0..n).map(|_| rng.random::<bool>() as u8).collect()
}

/// exp(-37) is below the resolution of a 53-bit uniform draw.
pub(crate) const METROPOLIS_CUTOFF: f64 = 37.0;

/// Metropolis test; draws only when the move is uphill.
#[inline]
pub(crate) fn metropolis(delta: f64, beta: f64, rng: &mut impl rand::Rng) -> bool {
    if delta <= 0.0 {
        return true;
    }
    let z = beta * delta;
    if z > METROPOLIS_CUTOFF {
        return false;
    }
    rng.random::<f64>() < (-z).exp()
}
