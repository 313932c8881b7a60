use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::{json, Value};

use qsplit_core::classical::{self, ClassicalError};
use qsplit_core::grover::{gas_minimize, GasConfig, GroverError, DEFAULT_MAX_ORACLE_CALLS};
use qsplit_core::oracle::{self, OracleError};
use qsplit_core::resources::{self, budget_for, emit_plot_data, gate_budget, register_widths};
use qsplit_core::{Instance, UNBOUNDED};

const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_BUDGET: u8 = 4;
const EXIT_MISMATCH: u8 = 5;

#[derive(Parser)]
#[command(
    name = "qsplit",
    version,
    about = "Grover adaptive search for CVRPTW with a split-based oracle"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the routes.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Gas)]
        method: Method,
        /// RNG seed; required for `gas`.
        #[arg(long)]
        seed: Option<u64>,
        /// Oracle-call budget for `gas`.
        #[arg(long, default_value_t = DEFAULT_MAX_ORACLE_CALLS)]
        budget: u64,
    },
    /// Compare the oracle circuit with the classical predicate.
    VerifyOracle {
        instance: PathBuf,
        /// Cost threshold, or `inf`.
        #[arg(long, value_parser = parse_threshold, default_value = "inf")]
        k: u64,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Qubit and gate budgets for an instance or for explicit parameters.
    Resources {
        #[arg(conflicts_with_all = ["n", "d_max", "t_max", "w_max"])]
        instance: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 8)]
        d_max: u64,
        #[arg(long, default_value_t = 8)]
        t_max: u64,
        #[arg(long, default_value_t = 512)]
        w_max: u64,
        /// Print `n,figure_qubits,budget_qubits` rows for a customer range.
        #[arg(long)]
        csv: bool,
        /// Customer range for `--csv`, as `FROM:TO`.
        #[arg(long, value_parser = parse_range, default_value = "1:100")]
        range: (usize, usize),
    },
    /// Optimal split of a fixed giant tour.
    Split {
        instance: PathBuf,
        /// Comma-separated customer ids.
        #[arg(long)]
        tour: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Gas,
    Brute,
    Heuristic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exhaustive,
    Sample,
}

fn parse_threshold(s: &str) -> Result<u64, String> {
    if s.eq_ignore_ascii_case("inf") {
        Ok(UNBOUNDED)
    } else {
        s.parse().map_err(|e| format!("{e}"))
    }
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected FROM:TO")?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{e}"));
    Ok((parse(a)?, parse(b)?))
}

struct Failure {
    code: u8,
    message: String,
    /// Printed on stdout before exiting, for partial results.
    output: Option<Value>,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Self {
            code,
            message: message.to_string(),
            output: None,
        }
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    let inst = Instance::parse(&text)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    info!("loaded {} customers from {}", inst.n(), path.display());
    Ok(inst)
}

fn classical_failure(e: ClassicalError) -> Failure {
    match e {
        ClassicalError::NoFeasibleSolution | ClassicalError::NoFeasibleSplit => {
            Failure::new(EXIT_INFEASIBLE, e)
        }
        _ => Failure::new(EXIT_USAGE, e),
    }
}

fn grover_failure(e: GroverError) -> Failure {
    match e {
        GroverError::NoFeasibleSolution => Failure::new(EXIT_INFEASIBLE, e),
        GroverError::BudgetExhausted(_) => Failure::new(EXIT_BUDGET, e),
        _ => Failure::new(EXIT_USAGE, e),
    }
}

fn oracle_failure(e: OracleError) -> Failure {
    Failure::new(EXIT_USAGE, e)
}

fn solve(path: &Path, method: Method, seed: Option<u64>, budget: u64) -> Result<Value, Failure> {
    let inst = load(path)?;
    match method {
        Method::Brute => {
            let best = classical::brute_force_optimum(&inst).map_err(classical_failure)?;
            Ok(json!({
                "method": "brute",
                "cost": best.cost,
                "routes": best.routes().routes,
            }))
        }
        Method::Heuristic => {
            let (routes, cost) =
                classical::route_first_cluster_second(&inst).map_err(classical_failure)?;
            Ok(json!({
                "method": "heuristic",
                "cost": cost,
                "routes": routes.routes,
            }))
        }
        Method::Gas => {
            let seed = seed
                .ok_or_else(|| Failure::new(EXIT_USAGE, "--seed is required for --method gas"))?;
            let mut cfg = GasConfig::new(seed);
            cfg.max_oracle_calls = budget;
            let trace = gas_minimize(&inst, &cfg).map_err(grover_failure)?;
            let best = trace
                .best
                .as_ref()
                .expect("successful runs carry a solution");
            info!(
                "{} thresholds, {} oracle calls, certified: {}",
                trace.thresholds.len(),
                trace.oracle_calls(),
                trace.certified
            );
            let out = json!({
                "method": "gas",
                "cost": best.cost,
                "routes": best.routes.routes,
                "trace": trace,
            });
            if trace.certified {
                Ok(out)
            } else {
                Err(Failure {
                    output: Some(out),
                    ..Failure::new(
                        EXIT_BUDGET,
                        format!("oracle-call budget of {budget} exhausted"),
                    )
                })
            }
        }
    }
}

fn verify(path: &Path, k: u64, mode: Mode, samples: u64, seed: u64) -> Result<Value, Failure> {
    let inst = load(path)?;
    let report = match mode {
        Mode::Exhaustive => oracle::verify_exhaustive(&inst, k),
        Mode::Sample => oracle::verify_sampled(&inst, k, samples, seed),
    }
    .map_err(oracle_failure)?;
    let out = json!({
        "assignments_checked": report.assignments_checked,
        "mismatches": report.mismatches,
        "dirty_ancillas": report.dirty_ancillas,
    });
    if report.is_clean() {
        Ok(out)
    } else {
        Err(Failure {
            output: Some(out),
            ..Failure::new(EXIT_MISMATCH, "oracle disagrees with the predicate")
        })
    }
}

enum Output {
    Json(Value),
    Text(String),
}

fn resources_cmd(
    instance: Option<&Path>,
    n: Option<usize>,
    maxima: (u64, u64, u64),
    csv: bool,
    range: (usize, usize),
) -> Result<Output, Failure> {
    let usage = |e: resources::ResourceError| Failure::new(EXIT_USAGE, e);
    let (d_max, t_max, w_max) = maxima;
    if csv {
        if instance.is_some() {
            return Err(Failure::new(
                EXIT_USAGE,
                "--csv takes explicit maxima, not an instance",
            ));
        }
        let rows = emit_plot_data(range.0..=range.1, d_max, t_max, w_max).map_err(usage)?;
        return Ok(Output::Text(resources::plot_csv(&rows)));
    }
    let (n, widths) = match (instance, n) {
        (Some(path), _) => {
            let inst = load(path)?;
            (inst.n(), register_widths(&inst))
        }
        (None, Some(n)) => {
            resources::qubit_budget(n, d_max, t_max, w_max).map_err(usage)?;
            (
                n,
                resources::RegisterWidths::from_maxima(n, d_max, t_max, w_max),
            )
        }
        (None, None) => return Err(Failure::new(EXIT_USAGE, "give an instance path or --n")),
    };
    let gates = gate_budget(n, widths.d_max.max(1)).map_err(usage)?;
    Ok(Output::Json(json!({
        "n": n,
        "widths": widths,
        "qubits": budget_for(n, &widths),
        "mcx_envelopes": gates,
        "mcx_envelope_total": gates.total(),
    })))
}

fn split(path: &Path, tour: &str) -> Result<Value, Failure> {
    let inst = load(path)?;
    let tour: Vec<usize> = tour
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::new(EXIT_USAGE, format!("bad tour: {e}")))?;
    let g = classical::build_auxiliary_graph(&inst, &tour).map_err(classical_failure)?;
    let (splits, cost) = classical::split_shortest_path(&g).map_err(classical_failure)?;
    Ok(json!({
        "arcs": g.arcs.iter().map(|a| [a.from as u64, a.to as u64, a.weight]).collect::<Vec<_>>(),
        "split_y": splits.iter().map(|&y| u8::from(y)).collect::<Vec<_>>(),
        "cost": cost,
    }))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            instance,
            method,
            seed,
            budget,
        } => solve(&instance, method, seed, budget).map(Output::Json),
        Command::VerifyOracle {
            instance,
            k,
            mode,
            samples,
            seed,
        } => verify(&instance, k, mode, samples, seed).map(Output::Json),
        Command::Resources {
            instance,
            n,
            d_max,
            t_max,
            w_max,
            csv,
            range,
        } => resources_cmd(instance.as_deref(), n, (d_max, t_max, w_max), csv, range),
        Command::Split { instance, tour } => split(&instance, &tour).map(Output::Json),
    };
    // A closed pipe downstream is not an error worth reporting.
    let emit = |text: &str| {
        let _ = std::io::stdout().lock().write_all(text.as_bytes());
    };
    let json_text = |v: &Value| serde_json::to_string_pretty(v).expect("json") + "\n";
    match result {
        Ok(Output::Json(v)) => {
            emit(&json_text(&v));
            ExitCode::SUCCESS
        }
        Ok(Output::Text(t)) => {
            emit(&t);
            ExitCode::SUCCESS
        }
        Err(f) => {
            if let Some(v) = &f.output {
                emit(&json_text(v));
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
