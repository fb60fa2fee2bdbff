//! Reproducible experiment harness: JSON manifests in, CSV and JSON results out.

mod report;
mod warehouse;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use report::{cmd_report, load_record, report_rows, ReportRow};
pub use warehouse::{cmd_warehouse, run_warehouse, OrdersSource, WarehouseManifest, WarehouseTable};

use crate::decomposition::{exterior_penalty_solve, ExteriorConfig};
use crate::error::{Error, Result};
use crate::formulations::io::{parse_dimacs, parse_edge_list, parse_qaplib};
use crate::formulations::{encode_permutation, maxcut_to_qubo, mvc_to_qubo, qap_to_qubo, Penalty, QuboProblem};
use crate::generators::{degree_sweep_specs, tinyqap_ladder, Artifact, GeneratorSpec};
use crate::qubo::{summarize, BinarySample, MetricsSummary, SampleSet, Sense};
use crate::rng::child_seed;
use crate::solvers::{brute_force_qap, brute_force_qubo, solve, RunOptions, SolverConfig, MAX_QAP_N, MAX_QUBO_N};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    EdgeList,
    Dimacs,
    Qaplib,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ProblemSource {
    File { path: PathBuf, format: FileFormat },
    Generated { spec: GeneratorSpec },
}

impl ProblemSource {
    pub fn instance_name(&self) -> String {
        match self {
            ProblemSource::File { path, .. } => path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned()),
            ProblemSource::Generated { spec } => spec.file_name().rsplit_once('.').map_or_else(|| spec.file_name(), |(a, _)| a.to_string()),
        }
    }

    pub fn load(&self) -> Result<Artifact> {
        match self {
            ProblemSource::File { path, format } => {
                let text = fs::read_to_string(path)?;
                Ok(match format {
                    FileFormat::EdgeList => Artifact::Graph(parse_edge_list(&text)?),
                    FileFormat::Dimacs => Artifact::Graph(parse_dimacs(&text)?),
                    FileFormat::Qaplib => Artifact::Qap(parse_qaplib(&text)?),
                })
            }
            ProblemSource::Generated { spec } => spec.generate(),
        }
    }

    fn resolve(&mut self, base: &Path) {
        if let ProblemSource::File { path, .. } = self {
            *path = resolve(base, path);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Formulation {
    Maxcut,
    Mvc {
        #[serde(default)]
        alpha: Penalty,
    },
    Qap {
        #[serde(default)]
        penalty: Penalty,
    },
}

pub fn formulate(artifact: &Artifact, form: Formulation) -> Result<QuboProblem> {
    match (artifact, form) {
        (Artifact::Graph(g), Formulation::Maxcut) => Ok(maxcut_to_qubo(g)),
        (Artifact::Graph(g), Formulation::Mvc { alpha }) => mvc_to_qubo(g, alpha),
        (Artifact::Qap(q), Formulation::Qap { penalty }) => qap_to_qubo(q, penalty),
        _ => Err(Error::Schema(format!("formulation {form:?} does not fit the loaded data"))),
    }
}

fn one() -> usize {
    1
}

/// Everything needed to replay a solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(default)]
    pub name: Option<String>,
    pub problem: ProblemSource,
    pub formulation: Formulation,
    pub solver: SolverConfig,
    /// QAP only: wrap the solver in the exterior penalty loop.
    #[serde(default)]
    pub exterior: Option<ExteriorConfig>,
    #[serde(default = "one")]
    pub repetitions: usize,
    pub seed: u64,
    #[serde(default)]
    pub ground_truth: Option<PathBuf>,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub trace: bool,
    pub output_dir: PathBuf,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunManifest {
    /// Reads a manifest; relative paths are taken from the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut m: RunManifest = serde_json::from_str(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        m.problem.resolve(base);
        m.ground_truth = m.ground_truth.map(|g| resolve(base, &g));
        m.output_dir = resolve(base, &m.output_dir);
        Ok(m)
    }

    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("manifest serializes").as_bytes())
    }

    pub fn stem(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.problem.instance_name())
    }

    fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Parameter("repetitions must be >= 1".into()));
        }
        if self.exterior.is_some() && !matches!(self.formulation, Formulation::Qap { .. }) {
            return Err(Error::Schema("exterior penalty applies to QAP formulations only".into()));
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Known optimum of an instance in reported units (cut value, cover size, QAP cost).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub instance: String,
    pub energy: f64,
    pub sense: Sense,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    GroundTruth,
    Oracle,
    /// Best feasible value of this run; not a certified optimum.
    Approx,
    Unnormalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub manifest_hash: String,
    pub manifest: RunManifest,
    pub instance: String,
    pub solver: String,
    pub sense: Sense,
    pub n: usize,
    pub total_constraints: usize,
    /// Energies are full QUBO energies, constant offset included.
    pub energy_includes_offset: bool,
    pub energies: Vec<f64>,
    pub feasible: Vec<bool>,
    pub violations: Vec<usize>,
    pub summary: MetricsSummary,
    pub reference: Option<f64>,
    pub normalization: Normalization,
    pub seconds: f64,
    pub samples_file: String,
    pub samples_sha256: String,
    pub trace_file: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exterior_rounds: Vec<usize>,
}

impl ResultRecord {
    /// Summary recomputed from the stored per-sample values.
    pub fn recompute_summary(&self) -> Result<MetricsSummary> {
        let n = self.energies.len();
        if self.feasible.len() != n || self.violations.len() != n {
            return Err(Error::Schema("per-sample columns differ in length".into()));
        }
        let samples = (0..n)
            .map(|i| BinarySample { bits: vec![], energy: self.energies[i], feasible: self.feasible[i], violations: self.violations[i] })
            .collect();
        let set = SampleSet::new(samples, self.solver.clone(), self.total_constraints, self.sense)?;
        let reference = if self.normalization == Normalization::Unnormalized { None } else { self.reference };
        summarize(&set, reference, self.sense)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutputs {
    pub record: ResultRecord,
    pub record_path: PathBuf,
    pub samples_path: PathBuf,
    pub trace_path: Option<PathBuf>,
}

/// Reference energy from the oracle when the instance is small enough.
pub fn oracle_reference(artifact: &Artifact, problem: &QuboProblem) -> Result<Option<f64>> {
    match artifact {
        Artifact::Qap(q) if q.n() <= MAX_QAP_N => Ok(Some(brute_force_qap(q, MAX_QAP_N)?.1)),
        Artifact::Graph(_) if problem.n() <= MAX_QUBO_N => {
            let (_, e) = brute_force_qubo(&problem.qubo, MAX_QUBO_N)?;
            Ok(Some(problem.reported_energy(e)))
        }
        _ => Ok(None),
    }
}

fn resolve_reference(m: &RunManifest, artifact: &Artifact, problem: &QuboProblem, set: &SampleSet) -> Result<(Option<f64>, Normalization)> {
    if let Some(path) = &m.ground_truth {
        let gt: GroundTruth = serde_json::from_str(&fs::read_to_string(path)?)?;
        if gt.sense != problem.sense {
            return Err(Error::Schema(format!("ground truth sense {:?} differs from problem sense {:?}", gt.sense, problem.sense)));
        }
        return Ok((Some(gt.energy), Normalization::GroundTruth));
    }
    if let Some(e) = oracle_reference(artifact, problem)? {
        return Ok((Some(e), Normalization::Oracle));
    }
    if m.normalize {
        if let Some(b) = set.best_feasible() {
            return Ok((Some(set.reported(b)), Normalization::Approx));
        }
    }
    Ok((None, Normalization::Unnormalized))
}

/// Formulate, solve over all repetitions, score, and write record, samples and trace.
pub fn cmd_solve(m: &RunManifest) -> Result<SolveOutputs> {
    m.validate()?;
    let artifact = m.problem.load()?;
    let problem = formulate(&artifact, m.formulation)?;
    let start = Instant::now();
    let mut rows: Vec<(usize, BinarySample)> = Vec::new();
    let mut trace = String::from("rep,unit,iteration,best_energy\n");
    let mut rounds = Vec::new();
    for r in 0..m.repetitions {
        let seed = child_seed(m.seed, "rep", r as u64);
        if let Some(ext) = &m.exterior {
            let inst = problem.qap_instance().expect("validated QAP formulation");
            let out = exterior_penalty_solve(inst, ext, &m.solver, seed)?;
            rounds.push(out.rounds);
            rows.push((r, problem.make_sample(encode_permutation(&out.perm))?));
        } else {
            let res = solve(&problem, &m.solver.with_seed(seed), &RunOptions { initial: None, trace: m.trace })?;
            for t in &res.trace {
                writeln!(trace, "{r},{},{},{}", t.unit, t.iteration, t.best_energy).unwrap();
            }
            rows.extend(res.samples.samples.into_iter().map(|s| (r, s)));
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let samples: Vec<BinarySample> = rows.iter().map(|r| r.1.clone()).collect();
    let mut set = SampleSet::new(samples, m.solver.label(), problem.total_constraints(), problem.sense)?;
    set.solve_seconds = seconds;
    let (reference, mut normalization) = resolve_reference(m, &artifact, &problem, &set)?;
    if reference == Some(0.0) {
        normalization = Normalization::Unnormalized;
    }
    let summary = summarize(&set, if normalization == Normalization::Unnormalized { None } else { reference }, problem.sense)?;

    let csv = samples_csv(&rows);
    fs::create_dir_all(&m.output_dir)?;
    let stem = m.stem();
    let samples_path = m.output_dir.join(format!("{stem}.samples.csv"));
    fs::write(&samples_path, &csv)?;
    let trace_path = if m.trace && m.exterior.is_none() {
        let p = m.output_dir.join(format!("{stem}.trace.csv"));
        fs::write(&p, &trace)?;
        Some(p)
    } else {
        None
    };
    let file_name = |p: &Path| p.file_name().expect("file path").to_string_lossy().into_owned();
    let record = ResultRecord {
        manifest_hash: m.hash(),
        manifest: m.clone(),
        instance: m.problem.instance_name(),
        solver: set.solver_label.clone(),
        sense: problem.sense,
        n: problem.n(),
        total_constraints: problem.total_constraints(),
        energy_includes_offset: true,
        energies: set.samples.iter().map(|s| s.energy).collect(),
        feasible: set.samples.iter().map(|s| s.feasible).collect(),
        violations: set.samples.iter().map(|s| s.violations).collect(),
        summary,
        reference,
        normalization,
        seconds,
        samples_file: file_name(&samples_path),
        samples_sha256: sha256_hex(csv.as_bytes()),
        trace_file: trace_path.as_deref().map(file_name),
        exterior_rounds: rounds,
    };
    let record_path = m.output_dir.join(format!("{stem}.result.json"));
    fs::write(&record_path, serde_json::to_string_pretty(&record)?)?;
    Ok(SolveOutputs { record, record_path, samples_path, trace_path })
}

pub const SAMPLES_HEADER: &str = "rep,read,energy,feasible,violations,bits";

fn samples_csv(rows: &[(usize, BinarySample)]) -> String {
    let mut s = format!("{SAMPLES_HEADER}\n");
    let mut read = 0;
    for (i, (r, x)) in rows.iter().enumerate() {
        if i > 0 && rows[i - 1].0 != *r {
            read = 0;
        }
        writeln!(s, "{r},{read},{},{},{},{}", x.energy, x.feasible as u8, x.violations, x.bit_string()).unwrap();
        read += 1;
    }
    s
}

/// Brute-force optimum written as a ground-truth file.
pub fn cmd_oracle(problem: &ProblemSource, form: Formulation, out: &Path) -> Result<GroundTruth> {
    let artifact = problem.load()?;
    let qp = formulate(&artifact, form)?;
    let energy = match &artifact {
        Artifact::Qap(q) => brute_force_qap(q, MAX_QAP_N)?.1,
        _ => qp.reported_energy(brute_force_qubo(&qp.qubo, MAX_QUBO_N)?.1),
    };
    let gt = GroundTruth { instance: problem.instance_name(), energy, sense: qp.sense, source: "brute_force".into() };
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(out, serde_json::to_string_pretty(&gt)?)?;
    Ok(gt)
}

/// One spec, or one of the dataset ladders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "plan", rename_all = "snake_case")]
pub enum GenPlan {
    Spec { spec: GeneratorSpec },
    TinyqapLadder { lo: usize, hi: usize, seed: u64 },
    DegreeSweep { seed: u64 },
}

impl GenPlan {
    pub fn specs(&self) -> Vec<GeneratorSpec> {
        match self {
            GenPlan::Spec { spec } => vec![spec.clone()],
            GenPlan::TinyqapLadder { lo, hi, seed } => tinyqap_ladder(*lo, *hi, *seed),
            GenPlan::DegreeSweep { seed } => degree_sweep_specs(*seed),
        }
    }
}

/// Writes each generated dataset under `out_dir`; returns the paths in spec order.
pub fn cmd_gen(plan: &GenPlan, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    plan.specs()
        .iter()
        .map(|spec| {
            let text = spec.generate()?.to_text(spec);
            let path = out_dir.join(spec.file_name());
            fs::write(&path, text)?;
            Ok(path)
        })
        .collect()
}
