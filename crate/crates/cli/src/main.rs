use std::path::{Path, PathBuf};
use std::process::ExitCode;

use annealbench::bench::{
    cmd_gen, cmd_oracle, cmd_report, cmd_solve, cmd_warehouse, FileFormat, Formulation, GenPlan, OrdersSource, ProblemSource, RunManifest,
    WarehouseManifest,
};
use annealbench::formulations::Penalty;
use annealbench::generators::{GeneratorSpec, Skew};
use annealbench::solvers::{PermAnnealConfig, PtConfig, SaConfig, SolverConfig, TabuConfig};
use annealbench::warehouse::{DecompPolicyConfig, Layout, DEFAULT_ABC_CLASSES};
use annealbench::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "annealbench", version, about = "QUBO and QAP annealing benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate datasets.
    Gen(GenArgs),
    /// Formulate, solve and score one problem.
    Solve(SolveArgs),
    /// Tabulate result records as CSV.
    Report(ReportArgs),
    /// Compare storage assignment policies.
    Warehouse(WarehouseArgs),
    /// Brute-force optimum written as a ground-truth file.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenArgs {
    /// JSON generation plan; overrides the other flags.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Generator spec as inline JSON, e.g. '{"family":"gnm","n":10,"m":20,"seed":1}'.
    #[arg(long)]
    spec: Option<String>,
    /// TinyQAP sizes LO..=HI.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    tinyqap_ladder: Option<Vec<usize>>,
    /// The 32-graph connectivity sweep at n = 145.
    #[arg(long)]
    degree_sweep: bool,
    #[arg(long, default_value_t = 1234)]
    seed: u64,
    #[arg(long, default_value = "data")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    EdgeList,
    Dimacs,
    Qaplib,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulationArg {
    Maxcut,
    Mvc,
    Qap,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Sa,
    Pt,
    Tabu,
    Random,
    BruteForce,
}

#[derive(Args)]
struct ProblemArgs {
    /// Instance file.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "edge-list")]
    format: FormatArg,
    #[arg(long, value_enum, default_value = "maxcut")]
    formulation: FormulationArg,
    /// Penalty weight (alpha for MVC, P for QAP): a number or "auto".
    #[arg(long, default_value = "auto")]
    penalty: String,
}

#[derive(Args)]
struct SolveArgs {
    /// JSON run manifest; overrides the other flags.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "sa")]
    solver: SolverArg,
    #[arg(long)]
    reads: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    #[arg(long, default_value_t = 1234)]
    seed: u64,
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    trace: bool,
    /// Wrap the solver in the exterior penalty loop (QAP only).
    #[arg(long)]
    exterior: bool,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Result record files (*.result.json).
    #[arg(required = true)]
    results: Vec<PathBuf>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SkewArg {
    None,
    Pareto8020,
}

#[derive(Args)]
struct WarehouseArgs {
    /// JSON warehouse manifest; overrides the other flags.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 45)]
    rows: usize,
    #[arg(long, default_value_t = 6)]
    columns: usize,
    /// Orders CSV; generated orders are used when absent.
    #[arg(long)]
    orders_file: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    orders: usize,
    #[arg(long, default_value_t = 4)]
    lines: usize,
    #[arg(long, value_enum, default_value = "pareto8020")]
    skew: SkewArg,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[arg(long, default_value_t = 1234)]
    seed: u64,
    /// Decomposition subsets; one per aisle by default.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    oos_iterations: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    out: PathBuf,
}

fn parse_penalty(s: &str) -> Result<Penalty> {
    if s == "auto" {
        return Ok(Penalty::Auto);
    }
    s.parse().map(Penalty::Value).map_err(|_| Error::Parameter(format!("penalty must be a number or \"auto\", got {s:?}")))
}

fn problem_of(p: &ProblemArgs) -> Result<(ProblemSource, Formulation)> {
    let path = p.problem.clone().ok_or_else(|| Error::Parameter("--problem or --manifest is required".into()))?;
    let format = match p.format {
        FormatArg::EdgeList => FileFormat::EdgeList,
        FormatArg::Dimacs => FileFormat::Dimacs,
        FormatArg::Qaplib => FileFormat::Qaplib,
    };
    let penalty = parse_penalty(&p.penalty)?;
    let formulation = match p.formulation {
        FormulationArg::Maxcut => Formulation::Maxcut,
        FormulationArg::Mvc => Formulation::Mvc { alpha: penalty },
        FormulationArg::Qap => Formulation::Qap { penalty },
    };
    Ok((ProblemSource::File { path, format }, formulation))
}

fn read(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

fn gen(a: GenArgs) -> Result<serde_json::Value> {
    let plan = if let Some(m) = &a.manifest {
        serde_json::from_str(&read(m)?)?
    } else if let Some(s) = &a.spec {
        GenPlan::Spec { spec: serde_json::from_str::<GeneratorSpec>(s)? }
    } else if let Some(l) = &a.tinyqap_ladder {
        GenPlan::TinyqapLadder { lo: l[0], hi: l[1], seed: a.seed }
    } else if a.degree_sweep {
        GenPlan::DegreeSweep { seed: a.seed }
    } else {
        return Err(Error::Parameter("one of --manifest, --spec, --tinyqap-ladder, --degree-sweep is required".into()));
    };
    let files = cmd_gen(&plan, &a.out)?;
    Ok(json!({ "files": files }))
}

fn solve(a: SolveArgs) -> Result<serde_json::Value> {
    let m = match &a.manifest {
        Some(path) => RunManifest::load(path)?,
        None => {
            let (problem, formulation) = problem_of(&a.problem)?;
            let solver = match a.solver {
                SolverArg::Sa => {
                    let d = SaConfig::default();
                    SolverConfig::Sa(SaConfig { num_reads: a.reads.unwrap_or(d.num_reads), sweeps: a.sweeps.unwrap_or(d.sweeps), ..d })
                }
                SolverArg::Pt => {
                    let d = PtConfig::default();
                    SolverConfig::Pt(PtConfig { replicas: a.replicas.unwrap_or(d.replicas), iterations: a.iterations.unwrap_or(d.iterations), ..d })
                }
                SolverArg::Tabu => {
                    let d = TabuConfig::default();
                    SolverConfig::Tabu(TabuConfig { max_iterations: a.iterations.unwrap_or(d.max_iterations), ..d })
                }
                SolverArg::Random => SolverConfig::Random { reads: a.reads.unwrap_or(100), seed: 0 },
                SolverArg::BruteForce => SolverConfig::BruteForce,
            };
            RunManifest {
                name: None,
                problem,
                formulation,
                solver,
                exterior: a.exterior.then(Default::default),
                repetitions: a.repetitions,
                seed: a.seed,
                ground_truth: a.ground_truth,
                normalize: a.normalize,
                trace: a.trace,
                output_dir: a.out,
            }
        }
    };
    let out = cmd_solve(&m)?;
    Ok(json!({
        "record": out.record_path,
        "samples": out.samples_path,
        "trace": out.trace_path,
        "manifest_hash": out.record.manifest_hash,
        "summary": out.record.summary,
        "normalization": out.record.normalization,
    }))
}

fn report(a: ReportArgs) -> Result<Option<serde_json::Value>> {
    let csv = cmd_report(&a.results)?;
    match a.out {
        Some(p) => {
            std::fs::write(&p, csv)?;
            Ok(Some(json!({ "table": p })))
        }
        None => {
            print!("{csv}");
            Ok(None)
        }
    }
}

fn warehouse(a: WarehouseArgs) -> Result<serde_json::Value> {
    let m = match &a.manifest {
        Some(p) => serde_json::from_str(&read(p)?)?,
        None => {
            let orders = match a.orders_file {
                Some(path) => OrdersSource::File { path },
                None => OrdersSource::Generated {
                    n_orders: a.orders,
                    lines_per_order: a.lines,
                    skew: match a.skew {
                        SkewArg::None => Skew::None,
                        SkewArg::Pareto8020 => Skew::Pareto8020,
                    },
                },
            };
            let d = PermAnnealConfig::default();
            WarehouseManifest {
                layout: Layout::new(a.rows, a.columns)?,
                orders,
                repetitions: a.repetitions,
                seed: a.seed,
                k: a.k,
                oos: PermAnnealConfig { iterations: a.oos_iterations.unwrap_or(d.iterations), ..d },
                decomp: DecompPolicyConfig::default(),
                abc_classes: DEFAULT_ABC_CLASSES.to_vec(),
                output: a.out,
            }
        }
    };
    let t = cmd_warehouse(&m)?;
    print!("{}", t.to_csv());
    Ok(json!({ "output": m.output }))
}

fn oracle(a: OracleArgs) -> Result<serde_json::Value> {
    let (problem, formulation) = problem_of(&a.problem)?;
    Ok(serde_json::to_value(cmd_oracle(&problem, formulation, &a.out)?)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a).map(Some),
        Command::Solve(a) => solve(a).map(Some),
        Command::Report(a) => report(a),
        Command::Warehouse(a) => warehouse(a).map(|_| None),
        Command::Oracle(a) => oracle(a).map(Some),
    };
    match result {
        Ok(Some(v)) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
