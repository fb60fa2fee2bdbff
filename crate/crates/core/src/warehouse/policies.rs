use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{build_distance_matrix, build_frequency_matrix, Assignment, DistanceMode, Layout, OrderSet, PickDistance};
use crate::decomposition::{solve_decomposed, DecompConfig, MatchMode, PartitionMethod, SubSolver};
use crate::error::{Error, Result};
use crate::formulations::QapInstance;
use crate::rng::stream;
use crate::solvers::{permutation_annealer, PermAnnealConfig, TempSchedule};

/// Popularity mass shares of classes A, B, C.
pub const DEFAULT_ABC_CLASSES: [f64; 3] = [0.2, 0.3, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    #[serde(rename = "ABC")]
    Abc,
    #[serde(rename = "COI")]
    Coi,
    #[serde(rename = "OOS")]
    Oos,
    #[serde(rename = "Random")]
    Random,
    #[serde(rename = "decomp")]
    QapDecomp,
}

impl Policy {
    pub const ALL: [Policy; 5] = [Policy::Abc, Policy::Coi, Policy::Oos, Policy::Random, Policy::QapDecomp];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Abc => "ABC",
            Policy::Coi => "COI",
            Policy::Oos => "OOS",
            Policy::Random => "Random",
            Policy::QapDecomp => "decomp",
        }
    }
}

fn check_inventory(layout: &Layout, orders: &OrderSet, item_sku: &[usize]) -> Result<()> {
    layout.validate()?;
    if item_sku.len() != layout.locations() {
        return Err(Error::Dimension { expected: layout.locations(), got: item_sku.len() });
    }
    if let Some(&s) = item_sku.iter().find(|&&s| s >= orders.n_skus()) {
        return Err(Error::Inventory(format!("item SKU {s} outside the order universe")));
    }
    Ok(())
}

/// Locations ordered by I/O distance, ties by id.
fn locations_by_io(layout: &Layout) -> Vec<usize> {
    let mut locs: Vec<usize> = (0..layout.locations()).collect();
    locs.sort_by(|&a, &b| layout.io_distance(a).total_cmp(&layout.io_distance(b)).then(a.cmp(&b)));
    locs
}

/// Items ordered by SKU popularity descending, ties by SKU id then item id.
fn items_by_popularity(pop: &[f64], item_sku: &[usize]) -> Vec<usize> {
    let mut items: Vec<usize> = (0..item_sku.len()).collect();
    items.sort_by(|&i, &j| {
        let (s, t) = (item_sku[i], item_sku[j]);
        pop[t].total_cmp(&pop[s]).then(s.cmp(&t)).then(i.cmp(&j))
    });
    items
}

pub fn policy_random(layout: &Layout, orders: &OrderSet, item_sku: &[usize], seed: u64) -> Result<Assignment> {
    check_inventory(layout, orders, item_sku)?;
    let mut loc: Vec<usize> = (0..layout.locations()).collect();
    loc.shuffle(&mut stream(seed, "policy-random", 0));
    Assignment::new(loc, item_sku.to_vec())
}

/// Most popular items at the locations nearest to I/O.
pub fn policy_coi(layout: &Layout, orders: &OrderSet, item_sku: &[usize]) -> Result<Assignment> {
    check_inventory(layout, orders, item_sku)?;
    let items = items_by_popularity(&orders.popularity(), item_sku);
    let locs = locations_by_io(layout);
    let mut loc = vec![0; item_sku.len()];
    for (&i, &l) in items.iter().zip(&locs) {
        loc[i] = l;
    }
    Assignment::new(loc, item_sku.to_vec())
}

/// Class-based storage: SKUs split by cumulative popularity mass, class c gets the
/// c-th band of locations by I/O distance, random placement within a band.
pub fn policy_abc(layout: &Layout, orders: &OrderSet, item_sku: &[usize], classes: &[f64], seed: u64) -> Result<Assignment> {
    check_inventory(layout, orders, item_sku)?;
    if classes.is_empty() || classes.iter().any(|&c| !(c > 0.0)) || (classes.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter("class shares must be positive and sum to 1".into()));
    }
    let pop = orders.popularity();
    let total: f64 = pop.iter().sum();
    let mut skus: Vec<usize> = (0..orders.n_skus()).collect();
    skus.sort_by(|&s, &t| pop[t].total_cmp(&pop[s]).then(s.cmp(&t)));
    let mut class_of = vec![classes.len() - 1; orders.n_skus()];
    let mut before = 0.0;
    for &s in &skus {
        let share = if total > 0.0 { before / total } else { 0.0 };
        let mut edge = 0.0;
        for (c, &w) in classes.iter().enumerate() {
            edge += w;
            if share < edge - 1e-12 {
                class_of[s] = c;
                break;
            }
        }
        before += pop[s];
    }
    let items = items_by_popularity(&pop, item_sku);
    let locs = locations_by_io(layout);
    let mut rng = stream(seed, "policy-abc", 0);
    let mut loc = vec![0; item_sku.len()];
    let mut start = 0;
    for c in 0..classes.len() {
        let members: Vec<usize> = items.iter().copied().filter(|&i| class_of[item_sku[i]] == c).collect();
        let mut band = locs[start..start + members.len()].to_vec();
        band.shuffle(&mut rng);
        for (&i, &l) in members.iter().zip(&band) {
            loc[i] = l;
        }
        start += members.len();
    }
    Assignment::new(loc, item_sku.to_vec())
}

/// Swap annealing on simulated pick distance; also returns the best-so-far trace.
pub fn policy_oos_traced(layout: &Layout, orders: &OrderSet, item_sku: &[usize], cfg: &PermAnnealConfig) -> Result<(Assignment, Vec<(u64, f64)>)> {
    check_inventory(layout, orders, item_sku)?;
    let mut obj = PickDistance::new(layout, orders, item_sku)?;
    let r = permutation_annealer(&mut obj, cfg, None, true)?;
    Ok((Assignment::new(r.perm, item_sku.to_vec())?, r.trace))
}

pub fn policy_oos(layout: &Layout, orders: &OrderSet, item_sku: &[usize], cfg: &PermAnnealConfig) -> Result<Assignment> {
    Ok(policy_oos_traced(layout, orders, item_sku, cfg)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompPolicyConfig {
    /// Weight of SKU popularity on the flow diagonal, pairing with I/O distance.
    pub io_weight: f64,
    #[serde(default = "aisle")]
    pub distance: DistanceMode,
    pub decomp: DecompConfig,
}

fn aisle() -> DistanceMode {
    DistanceMode::Aisle
}

impl Default for DecompPolicyConfig {
    fn default() -> Self {
        DecompPolicyConfig {
            io_weight: 2.0,
            distance: DistanceMode::Aisle,
            decomp: DecompConfig {
                partition: PartitionMethod::Auto,
                matching: MatchMode::Exhaustive,
                sub_solver: SubSolver::Permutation {
                    config: PermAnnealConfig { iterations: 1_000_000, temperature_schedule: TempSchedule::Auto, seed: 0 },
                },
                seed: 1234,
            },
        }
    }
}

/// QAP with co-order frequency as flow and location distances in `mode`.
///
/// With `io_weight` > 0 the flow diagonal carries weighted SKU popularity so the
/// I/O distances on the distance diagonal enter the objective.
pub fn qap_for_warehouse(layout: &Layout, orders: &OrderSet, item_sku: &[usize], io_weight: f64, mode: DistanceMode) -> Result<QapInstance> {
    check_inventory(layout, orders, item_sku)?;
    if !(io_weight >= 0.0 && io_weight.is_finite()) {
        return Err(Error::Parameter(format!("io_weight must be finite and >= 0, got {io_weight}")));
    }
    let mut flow = build_frequency_matrix(orders, item_sku)?;
    let pop = orders.popularity();
    for (i, &s) in item_sku.iter().enumerate() {
        flow.set(i, i, io_weight * pop[s]);
    }
    QapInstance::new(flow, build_distance_matrix(layout, mode)?)
}

pub fn policy_qap_decomp(layout: &Layout, orders: &OrderSet, item_sku: &[usize], k: usize, cfg: &DecompPolicyConfig) -> Result<Assignment> {
    let inst = qap_for_warehouse(layout, orders, item_sku, cfg.io_weight, cfg.distance)?;
    let out = solve_decomposed(&inst, k, &cfg.decomp)?;
    Assignment::new(out.perm, item_sku.to_vec())
}
