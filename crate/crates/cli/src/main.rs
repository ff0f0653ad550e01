//! `gridcomm`: command-line front end for the emergency-control simulator.
//!
//! Every subcommand prints JSON (or writes files) and exits with 0 on
//! success, 1 on bad usage, 2 on unreadable or invalid input and 3 when a
//! model could not be solved.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridcomm_core::cascade::{run_cascade, stability_check, CascadeResult, StabilityReport};
use gridcomm_core::control::{build_full_model, build_partial_model, ControlModel};
use gridcomm_core::grid::{validate_case, GridCase, NodeId, NodeKind, NodeSet};
use gridcomm_core::milp::ModelError;
use gridcomm_core::partition::{apply_mode, partition_areas, Dispatch, OperatingMode};
use gridcomm_core::scenario::{
    bundled_case, evaluate_full, evaluate_partial, load_case, sweep, CaseError, RunOptions, SweepConfig, SweepOptions,
    BUNDLED_CASES,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(
    name = "gridcomm",
    version,
    about = "Emergency control of a DC grid under communication loss"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a case and check its invariants.
    Validate { case: String },
    /// Optimal shedding when the control center reaches every node.
    SolveFull {
        case: String,
        #[command(flatten)]
        fail: FailArgs,
    },
    /// Optimal shedding when some nodes cannot be reached.
    SolvePartial {
        case: String,
        #[arg(long, value_delimiter = ',', required = true)]
        uncontrollable: Vec<u32>,
        #[command(flatten)]
        fail: FailArgs,
        #[arg(long)]
        mode: OperatingMode,
    },
    /// Run local relays on nodes cut off from the rest of the grid.
    Cascade {
        case: String,
        #[arg(long, value_delimiter = ',', required = true)]
        island: Vec<u32>,
        #[arg(long)]
        mode: OperatingMode,
    },
    /// Monte Carlo study; writes `results.csv` (and `details.jsonl`) to `--out`.
    Sweep {
        case: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; the output does not depend on it.
        #[arg(long, env = "GRIDCOMM_JOBS")]
        jobs: Option<usize>,
        /// Cross-check every small model against exhaustive enumeration.
        #[arg(long)]
        verify: bool,
        /// Also write per-scenario records, relay logs included.
        #[arg(long)]
        details: bool,
    },
}

#[derive(Debug, Args)]
struct FailArgs {
    /// Nodes lost in the initial failure.
    #[arg(long, value_delimiter = ',')]
    fail: Vec<u32>,
    /// Also write the optimization model in LP text format.
    #[arg(long)]
    dump: Option<PathBuf>,
}

fn dump_model(path: &Option<PathBuf>, model: Result<ControlModel, ModelError>) -> Result<(), CliError> {
    let Some(path) = path else { return Ok(()) };
    let model = model.map_err(|e| CliError::Solver(e.to_string()))?;
    std::fs::write(path, model.milp.to_lp_string())
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Case(_) | CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

/// A path, or the name of a bundled case when no such file exists.
fn open_case(arg: &str) -> Result<GridCase, CliError> {
    if !Path::new(arg).exists() {
        if let Some(case) = bundled_case(arg) {
            return Ok(case);
        }
    }
    load_case(arg).map_err(|e| match e {
        CaseError::Io { .. } => CliError::Input(format!("{e} (bundled cases: {})", BUNDLED_CASES.join(", "))),
        other => other.into(),
    })
}

fn node_set(case: &GridCase, ids: &[u32], flag: &str) -> Result<NodeSet, CliError> {
    let mut set = NodeSet::new();
    for &id in ids {
        if !case.contains_node(NodeId(id)) {
            return Err(CliError::Input(format!("--{flag}: node {id} is not in the case")));
        }
        set.insert(NodeId(id));
    }
    Ok(set)
}

fn print_json<T: Serialize>(value: &T) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("results serialize");
    // a closed pipe (`| head`) is not an error worth reporting
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

#[derive(Serialize)]
struct CaseSummary {
    nodes: usize,
    generators: usize,
    loads: usize,
    buses: usize,
    lines: usize,
    initial_load: f64,
    omega_s: f64,
    omega_min: f64,
    omega_max: f64,
}

#[derive(Serialize)]
struct AreaCascade {
    nodes: Vec<NodeId>,
    stability: StabilityReport,
    cascade: CascadeResult,
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Validate { case } => {
            let case = open_case(&case)?;
            // parsing already validated; this only guards against drift
            let report = validate_case(&case);
            if !report.is_clean() {
                return Err(CliError::Input(report.to_string()));
            }
            let count = |f: fn(&NodeKind) -> bool| case.nodes().iter().filter(|n| f(&n.kind)).count();
            let band = case.band();
            print_json(&CaseSummary {
                nodes: case.nodes().len(),
                generators: count(|k| matches!(k, NodeKind::Generator(_))),
                loads: count(|k| matches!(k, NodeKind::Load(_))),
                buses: count(|k| matches!(k, NodeKind::Bus)),
                lines: case.lines().len(),
                initial_load: case.initial_load(),
                omega_s: case.omega_s(),
                omega_min: band.omega_min,
                omega_max: band.omega_max,
            });
        }
        Command::SolveFull { case, fail } => {
            let case = open_case(&case)?;
            let failed = node_set(&case, &fail.fail, "fail")?;
            dump_model(&fail.dump, build_full_model(&case, &failed))?;
            let res =
                evaluate_full(&case, &failed, RunOptions::default()).map_err(|e| CliError::Solver(e.to_string()))?;
            print_json(&res);
        }
        Command::SolvePartial {
            case,
            uncontrollable,
            fail,
            mode,
        } => {
            let case = open_case(&case)?;
            let failed = node_set(&case, &fail.fail, "fail")?;
            let unc = node_set(&case, &uncontrollable, "uncontrollable")?;
            if fail.dump.is_some() {
                let dispatch = Dispatch::from_case(&case);
                let partition = apply_mode(&partition_areas(&case, &failed, &unc), &case, mode, &dispatch);
                dump_model(&fail.dump, build_partial_model(&case, &partition))?;
            }
            let res = evaluate_partial(
                &case,
                &failed,
                &unc,
                mode,
                &Dispatch::from_case(&case),
                RunOptions::default(),
            )
            .map_err(|e| CliError::Solver(e.to_string()))?;
            print_json(&res);
        }
        Command::Cascade { case, island, mode } => {
            let case = open_case(&case)?;
            let nodes = node_set(&case, &island, "island")?;
            let partition = apply_mode(
                &partition_areas(&case, &NodeSet::new(), &nodes),
                &case,
                mode,
                &Dispatch::from_case(&case),
            );
            let band = case.band();
            let limits = (band.omega_min, band.omega_max);
            let out: Vec<AreaCascade> = partition
                .areas
                .iter()
                .map(|area| {
                    let island = area.island(&case);
                    AreaCascade {
                        nodes: area.nodes.iter().copied().collect(),
                        stability: stability_check(&island, limits),
                        cascade: run_cascade(&island, limits),
                    }
                })
                .collect();
            print_json(&out);
        }
        Command::Sweep {
            case,
            config,
            out,
            jobs,
            verify,
            details,
        } => {
            let case = open_case(&case)?;
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", config.display())))?;
            let config: SweepConfig = serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("malformed sweep config {}: {e}", config.display())))?;
            let jobs = match jobs {
                Some(0) => return Err(CliError::Usage("--jobs must be at least 1".into())),
                Some(n) => n,
                None => std::thread::available_parallelism().map_or(1, |n| n.get()),
            };
            let opts = SweepOptions {
                jobs,
                run: RunOptions { verify },
            };
            let table = sweep(&case, &config, &opts).map_err(|e| CliError::Input(e.to_string()))?;
            std::fs::create_dir_all(&out)
                .map_err(|e| CliError::Input(format!("cannot create {}: {e}", out.display())))?;
            let write = |name: &str, body: String| {
                let path = out.join(name);
                std::fs::write(&path, body)
                    .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
            };
            write("results.csv", table.to_csv())?;
            if details {
                write("details.jsonl", table.details_jsonl())?;
            }
            let anomalies = table.total_anomalies();
            let solver = table.solver_anomalies();
            eprintln!(
                "{} runs x {} replications, {anomalies} anomalous scenario(s), wrote {}",
                config.runs.len(),
                config.replications,
                out.display()
            );
            if solver > 0 {
                return Err(CliError::Solver(format!("{solver} scenario(s) failed to solve")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
