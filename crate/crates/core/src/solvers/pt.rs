use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{auto_beta_range, check_initial, check_nonempty, geometric, metropolis, random_bits, METROPOLIS_CUTOFF, RunOptions, SolveResult, TracePoint};
use crate::error::{Error, Result};
use crate::formulations::QuboProblem;
use crate::qubo::{QuboMatrix, SampleSet};
use crate::rng::{stream, Rng as StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaLadder {
    Auto,
    Geometric { hot: f64, cold: f64 },
    /// One beta per replica, strictly increasing.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtConfig {
    pub replicas: usize,
    pub iterations: u64,
    pub beta_ladder: BetaLadder,
    pub swap_interval: u64,
    pub offset_increase_rate: f64,
    pub seed: u64,
}

impl Default for PtConfig {
    fn default() -> Self {
        PtConfig {
            replicas: 128,
            iterations: 100_000,
            beta_ladder: BetaLadder::Auto,
            swap_interval: 10,
            offset_increase_rate: 0.0,
            seed: 1234,
        }
    }
}

impl PtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicas < 2 {
            return Err(Error::Parameter("replicas must be >= 2".into()));
        }
        if self.swap_interval == 0 || self.iterations == 0 {
            return Err(Error::Parameter("iterations and swap_interval must be >= 1".into()));
        }
        if !(self.offset_increase_rate >= 0.0) {
            return Err(Error::Parameter("offset_increase_rate must be >= 0".into()));
        }
        match &self.beta_ladder {
            BetaLadder::Auto => {}
            BetaLadder::Geometric { hot, cold } => {
                if !(*hot > 0.0 && hot < cold && cold.is_finite()) {
                    return Err(Error::Parameter(format!("beta ladder needs 0 < hot < cold, got ({hot}, {cold})")));
                }
            }
            BetaLadder::Custom(b) => {
                if b.len() != self.replicas || b.windows(2).any(|w| !(w[0] < w[1])) || b[0] < 0.0 {
                    return Err(Error::Parameter("custom ladder needs one increasing beta per replica".into()));
                }
            }
        }
        Ok(())
    }

    pub fn betas(&self, q: &QuboMatrix) -> Vec<f64> {
        match &self.beta_ladder {
            BetaLadder::Auto => {
                let (h, c) = auto_beta_range(q);
                geometric(h, c, self.replicas)
            }
            BetaLadder::Geometric { hot, cold } => geometric(*hot, *cold, self.replicas),
            BetaLadder::Custom(b) => b.clone(),
        }
    }
}

const MEMO_SLOTS: usize = 1024;

/// Direct-mapped cache of exp(-beta * d) keyed on the exact bits of d. Integer-valued
/// QUBOs revisit a few hundred distinct deltas, so most Metropolis tests skip exp.
struct ExpMemo {
    beta: f64,
    keys: Vec<u64>,
    vals: Vec<f64>,
}

impl ExpMemo {
    fn new() -> Self {
        ExpMemo { beta: f64::NAN, keys: vec![u64::MAX; MEMO_SLOTS], vals: vec![0.0; MEMO_SLOTS] }
    }

    fn clear(&mut self, beta: f64) {
        self.beta = beta;
        self.keys.fill(u64::MAX);
    }

    /// Same decisions and draws as `metropolis(d, self.beta, rng)`.
    #[inline]
    fn metropolis(&mut self, d: f64, rng: &mut StreamRng) -> bool {
        if d <= 0.0 {
            return true;
        }
        let z = self.beta * d;
        if z > METROPOLIS_CUTOFF {
            return false;
        }
        let key = d.to_bits();
        let slot = (key ^ (key >> 29) ^ (key >> 47)) as usize & (MEMO_SLOTS - 1);
        let p = if self.keys[slot] == key {
            self.vals[slot]
        } else {
            let p = (-z).exp();
            self.keys[slot] = key;
            self.vals[slot] = p;
            p
        };
        rng.random::<f64>() < p
    }
}

struct Walker {
    id: usize,
    x: Vec<u8>,
    deltas: Vec<f64>,
    e: f64,
    best_x: Vec<u8>,
    best_e: f64,
    offset: f64,
    rng: StreamRng,
    accepted: Vec<usize>,
    memo: ExpMemo,
    trace: Vec<TracePoint>,
}

impl Walker {
    fn new(q: &QuboMatrix, id: usize, seed: u64, initial: Option<&[u8]>) -> Self {
        let mut rng = stream(seed, "pt", id as u64);
        let x = match initial {
            Some(x0) => x0.to_vec(),
            None => random_bits(q.n(), &mut rng),
        };
        let mut deltas = vec![0.0; q.n()];
        q.all_deltas(&x, &mut deltas);
        let e = q.energy_unchecked(&x);
        Walker { id, best_x: x.clone(), x, deltas, e, best_e: e, offset: 0.0, rng, accepted: vec![0; q.n()], memo: ExpMemo::new(), trace: Vec::new() }
    }

    /// One parallel-trial step; returns whether a flip happened.
    #[inline]
    fn step(&mut self, q: &QuboMatrix, beta: f64, offset_step: f64) -> bool {
        let offset = self.offset;
        if beta != self.memo.beta {
            self.memo.clear(beta);
        }
        let mut len = 0;
        for (k, &d) in self.deltas.iter().enumerate() {
            self.accepted[len] = k;
            len += self.memo.metropolis(d - offset, &mut self.rng) as usize;
        }
        if len == 0 {
            self.offset += offset_step;
            return false;
        }
        self.offset = 0.0;
        let k = self.accepted[self.rng.random_range(0..len)];
        self.e += self.deltas[k];
        self.x[k] ^= 1;
        q.update_deltas(&self.x, k, &mut self.deltas);
        true
    }

    fn record_best(&mut self, iteration: u64, trace: bool) {
        if self.e < self.best_e {
            self.best_e = self.e;
            self.best_x.copy_from_slice(&self.x);
            if trace {
                self.trace.push(TracePoint { unit: self.id, iteration, best_energy: self.e });
            }
        }
    }
}

pub(crate) struct EngineOut {
    /// Per beta slot: (final x, best-seen x)
    pub slots: Vec<(Vec<u8>, Vec<u8>)>,
    pub trace: Vec<TracePoint>,
}

pub(crate) fn engine(
    q: &QuboMatrix,
    betas: &[f64],
    iterations: u64,
    swap_interval: Option<u64>,
    rate: f64,
    seed: u64,
    initial: Option<&[u8]>,
    trace: bool,
) -> EngineOut {
    let offset_step = rate * q.coefficient_scale().mean_abs;
    let mut walkers: Vec<Walker> = (0..betas.len()).map(|i| Walker::new(q, i, seed, initial)).collect();
    if trace {
        for w in &mut walkers {
            w.trace.push(TracePoint { unit: w.id, iteration: 0, best_energy: w.best_e });
        }
    }
    let chunk = swap_interval.unwrap_or(iterations).max(1);
    let mut swap_rng = stream(seed, "pt-swap", 0);
    let mut t = 0u64;
    let mut round = 0usize;
    while t < iterations {
        let steps = chunk.min(iterations - t);
        walkers.par_iter_mut().enumerate().for_each(|(slot, w)| {
            let beta = betas[slot];
            for s in 0..steps {
                if w.step(q, beta, offset_step) {
                    w.record_best(t + s + 1, trace);
                }
            }
        });
        t += steps;
        if swap_interval.is_some() && walkers.len() > 1 {
            let mut i = round % 2;
            while i + 1 < walkers.len() {
                let arg = (betas[i] - betas[i + 1]) * (walkers[i].e - walkers[i + 1].e);
                if arg >= 0.0 || swap_rng.random::<f64>() < arg.exp() {
                    walkers.swap(i, i + 1);
                }
                i += 2;
            }
            round += 1;
        }
    }
    let mut all_trace = Vec::new();
    let mut by_id: Vec<&Walker> = walkers.iter().collect();
    by_id.sort_by_key(|w| w.id);
    for w in by_id {
        all_trace.extend_from_slice(&w.trace);
    }
    EngineOut { slots: walkers.into_iter().map(|w| (w.x, w.best_x)).collect(), trace: all_trace }
}

/// Parallel-trial Metropolis at a single fixed beta; returns (final x, best-seen x, best energy).
pub fn parallel_trial_fixed_beta(q: &QuboMatrix, beta: f64, steps: u64, seed: u64, initial: Option<&[u8]>) -> (Vec<u8>, Vec<u8>, f64) {
    let mut rng = stream(seed, "pt", 0);
    let mut x = match initial {
        Some(x0) => x0.to_vec(),
        None => random_bits(q.n(), &mut rng),
    };
    let mut best = x.clone();
    let mut best_e = q.energy_unchecked(&x);
    let mut cand = Vec::new();
    for _ in 0..steps {
        cand.clear();
        for k in 0..q.n() {
            let d = q.delta_unchecked(&x, k);
            if metropolis(d, beta, &mut rng) {
                cand.push(k);
            }
        }
        if cand.is_empty() {
            continue;
        }
        let k = cand[rng.random_range(0..cand.len())];
        x[k] ^= 1;
        let e = q.energy_unchecked(&x);
        if e < best_e {
            best_e = e;
            best.copy_from_slice(&x);
        }
    }
    (x, best, best_e)
}

/// Replica-exchange sampler with parallel trial and dynamic offset.
pub fn parallel_tempering(p: &QuboProblem, cfg: &PtConfig) -> Result<SampleSet> {
    Ok(run(p, cfg, &RunOptions::default())?.samples)
}

pub(crate) fn run(p: &QuboProblem, cfg: &PtConfig, opts: &RunOptions) -> Result<SolveResult> {
    cfg.validate()?;
    check_nonempty(&p.qubo)?;
    check_initial(&p.qubo, opts)?;
    let start = Instant::now();
    let betas = cfg.betas(&p.qubo);
    let out = engine(
        &p.qubo,
        &betas,
        cfg.iterations,
        Some(cfg.swap_interval),
        cfg.offset_increase_rate,
        cfg.seed,
        opts.initial.as_deref(),
        opts.trace,
    );
    let label = super::SolverConfig::Pt(cfg.clone()).label();
    let mut samples = p.sample_set(out.slots.into_iter().map(|s| s.1).collect(), label)?;
    samples.solve_seconds = start.elapsed().as_secs_f64();
    Ok(SolveResult { samples, trace: out.trace })
}
