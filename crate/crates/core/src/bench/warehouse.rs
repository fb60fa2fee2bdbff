use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{gen_orders, Skew};
use crate::qubo::fmt_f64;
use crate::rng::child_seed;
use crate::solvers::PermAnnealConfig;
use crate::warehouse::{
    policy_abc, policy_coi, policy_oos, policy_qap_decomp, policy_random, total_pick_distance, DecompPolicyConfig, Layout, OrderSet, Policy,
    DEFAULT_ABC_CLASSES,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum OrdersSource {
    /// Fresh order set per repetition over one SKU per location.
    Generated { n_orders: usize, lines_per_order: usize, skew: Skew },
    /// Same orders for every repetition.
    File { path: PathBuf },
}

fn five() -> usize {
    5
}

fn abc() -> Vec<f64> {
    DEFAULT_ABC_CLASSES.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarehouseManifest {
    pub layout: Layout,
    pub orders: OrdersSource,
    #[serde(default = "five")]
    pub repetitions: usize,
    pub seed: u64,
    /// Subsets for the decomposition policy; one per aisle when absent.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub oos: PermAnnealConfig,
    #[serde(default)]
    pub decomp: DecompPolicyConfig,
    #[serde(default = "abc")]
    pub abc_classes: Vec<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Total pick distance per run, columns in `Policy::ALL` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarehouseTable {
    pub policies: Vec<Policy>,
    pub runs: Vec<Vec<f64>>,
    pub means: Vec<f64>,
}

impl WarehouseTable {
    pub fn column(&self, p: Policy) -> usize {
        self.policies.iter().position(|&q| q == p).expect("all policies present")
    }

    pub fn mean(&self, p: Policy) -> f64 {
        self.means[self.column(p)]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("run");
        for p in &self.policies {
            write!(s, ",{}", p.name()).unwrap();
        }
        s.push('\n');
        let line = |label: String, v: &[f64]| format!("{label},{}\n", v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(","));
        for (i, r) in self.runs.iter().enumerate() {
            s.push_str(&line(i.to_string(), r));
        }
        s.push_str(&line("mean".into(), &self.means));
        s
    }
}

fn one_run(m: &WarehouseManifest, rep: usize) -> Result<Vec<f64>> {
    let n = m.layout.locations();
    let orders = match &m.orders {
        OrdersSource::Generated { n_orders, lines_per_order, skew } => {
            gen_orders(n, *n_orders, *lines_per_order, *skew, child_seed(m.seed, "orders", rep as u64))?
        }
        OrdersSource::File { path } => OrderSet::from_csv(&fs::read_to_string(path)?, n)?,
    };
    let items: Vec<usize> = (0..n).collect();
    let seed = |tag: &str| child_seed(m.seed, tag, rep as u64);
    let k = m.k.unwrap_or(m.layout.aisles());
    let mut decomp = m.decomp.clone();
    decomp.decomp.seed = seed("decomp");
    let oos = PermAnnealConfig { seed: seed("oos"), ..m.oos.clone() };
    Policy::ALL
        .iter()
        .map(|p| {
            let a = match p {
                Policy::Abc => policy_abc(&m.layout, &orders, &items, &m.abc_classes, seed("abc"))?,
                Policy::Coi => policy_coi(&m.layout, &orders, &items)?,
                Policy::Oos => policy_oos(&m.layout, &orders, &items, &oos)?,
                Policy::Random => policy_random(&m.layout, &orders, &items, seed("random"))?,
                Policy::QapDecomp => policy_qap_decomp(&m.layout, &orders, &items, k, &decomp)?,
            };
            total_pick_distance(&orders, &a, &m.layout)
        })
        .collect()
}

/// All five policies on each repetition's dataset.
pub fn run_warehouse(m: &WarehouseManifest) -> Result<WarehouseTable> {
    m.layout.validate()?;
    if m.repetitions == 0 {
        return Err(Error::Parameter("repetitions must be >= 1".into()));
    }
    let runs: Vec<Vec<f64>> = (0..m.repetitions).into_par_iter().map(|r| one_run(m, r)).collect::<Result<_>>()?;
    let means = (0..Policy::ALL.len()).map(|c| runs.iter().map(|r| r[c]).sum::<f64>() / runs.len() as f64).collect();
    Ok(WarehouseTable { policies: Policy::ALL.to_vec(), runs, means })
}

/// Runs the comparison and writes the CSV table when `output` is set.
pub fn cmd_warehouse(m: &WarehouseManifest) -> Result<WarehouseTable> {
    let t = run_warehouse(m)?;
    if let Some(out) = &m.output {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(out, t.to_csv())?;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{DecompConfig, MatchMode, PartitionMethod, SubSolver};
    use crate::solvers::TempSchedule;
    use crate::warehouse::DistanceMode;

    fn wh8() -> WarehouseManifest {
        WarehouseManifest {
            layout: Layout::new(4, 2).unwrap(),
            orders: OrdersSource::Generated { n_orders: 10, lines_per_order: 3, skew: Skew::None },
            repetitions: 2,
            seed: 1,
            k: None,
            oos: PermAnnealConfig { iterations: 5000, temperature_schedule: TempSchedule::Auto, seed: 0 },
            decomp: DecompPolicyConfig {
                io_weight: 1.0,
                distance: DistanceMode::Exact,
                decomp: DecompConfig { partition: PartitionMethod::Auto, matching: MatchMode::Exhaustive, sub_solver: SubSolver::Exact, seed: 0 },
            },
            abc_classes: DEFAULT_ABC_CLASSES.to_vec(),
            output: None,
        }
    }

    #[test]
    fn five_policy_columns() {
        let t = run_warehouse(&wh8()).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "run,ABC,COI,OOS,Random,decomp");
        assert_eq!(csv.lines().count(), 4);
        assert!(t.runs.iter().all(|r| r.len() == 5));
    }

    #[test]
    fn wh8_smoke_under_ten_seconds() {
        let start = std::time::Instant::now();
        run_warehouse(&wh8()).unwrap();
        assert!(start.elapsed().as_secs_f64() < 10.0);
    }

    #[test]
    fn manifest_defaults() {
        let m: WarehouseManifest = serde_json::from_str(
            r#"{"layout":{"rows":45,"columns":6},"orders":{"source":"generated","n_orders":100,"lines_per_order":4,"skew":"pareto8020"},"seed":3}"#,
        )
        .unwrap();
        assert_eq!(m.repetitions, 5);
        assert_eq!(m.layout.column_spacing, 3.0);
    }
}
