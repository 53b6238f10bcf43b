//! Command-line driver for the 1-median adversary laboratory.
//!
//! Subcommands: `run` (one algorithm against one adversary), `sweep`
//! (a parameter grid exported as CSV or JSONL), `validate` (metric axioms of
//! a dense matrix file), `recover` (shortest-path completion experiment).
//!
//! Exit codes: 0 success, 2 validation/recovery failure, 3 adversary premise
//! failure (no lightly queried planted point), 4 internal invariant
//! violation.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use median_adversary::adversary::{AdversaryError, DeltaParam, FinalizedInstance};
use median_adversary::algorithms::AlgorithmId;
use median_adversary::harness::{
    perform_run, run_sweep, HarnessError, RunOptions, RunRecord, SweepPlan, CSV_HEADER,
};
use median_adversary::metric::{validate_metric, DenseMetric, Metric, ValidateMode};
use median_adversary::recovery::{
    all_pairs, build_query_graph, chain_audit, QuerySet, RecoveryError,
};

const EXIT_VALIDATION: u8 = 2;
const EXIT_PREMISE: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "median-adversary", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm against a fresh adversary and print the record.
    Run(RunArgs),
    /// Run a grid of (n, delta, algorithm) cells and write a table.
    Sweep(SweepArgs),
    /// Check the metric axioms of a dense matrix file.
    Validate(ValidateArgs),
    /// Shortest-path completion experiment on an adversary instance.
    Recover(RecoverArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    n: usize,
    /// Density parameter as an exact fraction, e.g. 1/20.
    #[arg(long)]
    delta: String,
    /// Algorithm: exhaustive | pivot | pivot_h[:h] | greedy_probe.
    #[arg(long)]
    alg: String,
    /// Distinct-query budget (default: unlimited).
    #[arg(long)]
    budget: Option<u64>,
    /// Force the O(n^3) validator even above n = 300.
    #[arg(long)]
    full_validate: bool,
    /// Write the finalized instance as JSON.
    #[arg(long, value_name = "PATH")]
    export_instance: Option<PathBuf>,
    /// Write the finalized metric in the dense text format (n <= 3000).
    #[arg(long, value_name = "PATH")]
    export_dense: Option<PathBuf>,
    /// Write the run trace as JSON lines [x, y, d], one query per line.
    #[arg(long, value_name = "PATH")]
    export_trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated point counts, e.g. 100,1000.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Comma-separated fractions, e.g. 1/20,1/15.
    #[arg(long, value_delimiter = ',')]
    delta: Vec<String>,
    /// Comma-separated algorithm names.
    #[arg(long, value_delimiter = ',')]
    alg: Vec<String>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    full_validate: bool,
    /// Worker threads (default: all cores). The MEDIAN_ADVERSARY_WORKERS
    /// environment variable overrides this flag.
    #[arg(long)]
    workers: Option<usize>,
    /// Output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Args)]
struct ValidateArgs {
    /// Dense metric text file: first line n, then n rows of n integers.
    path: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Full)]
    mode: Mode,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Full,
    Structured,
}

#[derive(Args)]
struct RecoverArgs {
    /// Load a previously exported instance instead of running fresh.
    #[arg(long, conflicts_with_all = ["n", "delta", "alg"])]
    instance: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    alg: Option<String>,
    /// Which pairs feed the completion: the run's query set or all pairs.
    #[arg(long, value_enum, default_value_t = QuerySource::Run)]
    query_source: QuerySource,
    /// Read the observed pairs from a query-set file ("n m" header, then
    /// "lo hi length" lines) instead of --query-source.
    #[arg(long, value_name = "PATH", conflicts_with = "query_source")]
    query_file: Option<PathBuf>,
    /// Write the observed pairs used for the completion as a query-set file.
    #[arg(long, value_name = "PATH")]
    export_query_set: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QuerySource {
    Run,
    AllPairs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Recover(args) => cmd_recover(args),
    }
}

fn diagnostic(kind: &str, detail: impl ToString) -> ExitCode {
    let payload = json!({ "error": kind, "detail": detail.to_string() });
    eprintln!("{payload}");
    match kind {
        "empty_safe_set" => ExitCode::from(EXIT_PREMISE),
        "bound_violation" | "replay_mismatch" => ExitCode::from(EXIT_INTERNAL),
        _ => ExitCode::from(EXIT_VALIDATION),
    }
}

fn harness_failure(err: HarnessError) -> ExitCode {
    match &err {
        HarnessError::Adversary(AdversaryError::EmptySafeSet { .. }) => {
            diagnostic("empty_safe_set", err)
        }
        HarnessError::Adversary(AdversaryError::BoundViolation { .. }) => {
            diagnostic("bound_violation", err)
        }
        HarnessError::Replay(_) => diagnostic("replay_mismatch", err),
        HarnessError::Validation { .. } => diagnostic("validation_failed", err),
        _ => diagnostic("invalid_request", err),
    }
}

fn parse_run_inputs(
    n: usize,
    delta: &str,
    alg: &str,
) -> Result<(DeltaParam, AlgorithmId), ExitCode> {
    let delta = DeltaParam::parse(delta).map_err(|e| diagnostic("invalid_request", e))?;
    let alg = AlgorithmId::parse(alg).map_err(|e| diagnostic("invalid_request", e))?;
    if n < 2 {
        return Err(diagnostic("invalid_request", "n must be at least 2"));
    }
    Ok((delta, alg))
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let (delta, alg) = match parse_run_inputs(args.n, &args.delta, &args.alg) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let mut opts = RunOptions::new(args.n, delta, alg);
    opts.budget = args.budget;
    opts.full_validate = args.full_validate;
    let output = match perform_run(&opts) {
        Ok(output) => output,
        Err(err) => return harness_failure(err),
    };
    let line = serde_json::to_string(&output.record).expect("record serializes");
    if output.record.status == "empty_safe_set" {
        println!("{line}");
        return ExitCode::from(EXIT_PREMISE);
    }
    let artifacts = output.artifacts.as_ref().expect("ok status has artifacts");
    if let Some(path) = &args.export_instance {
        let export = artifacts.instance.export();
        if let Err(e) = fs::write(path, serde_json::to_string(&export).expect("serializes")) {
            return diagnostic("io_error", e);
        }
    }
    if let Some(path) = &args.export_dense {
        if args.n > 3000 {
            return diagnostic("invalid_request", "dense export is limited to n <= 3000");
        }
        if let Err(e) = fs::write(path, artifacts.instance.to_dense().to_text()) {
            return diagnostic("io_error", e);
        }
    }
    if let Some(path) = &args.export_trace {
        let mut lines = String::new();
        for (key, d) in &artifacts.trace.queries {
            lines.push_str(&format!("[{},{},{}]\n", key.lo(), key.hi(), d));
        }
        if let Err(e) = fs::write(path, lines) {
            return diagnostic("io_error", e);
        }
    }
    println!("{line}");
    ExitCode::SUCCESS
}

fn cmd_sweep(args: SweepArgs) -> ExitCode {
    let mut deltas = Vec::new();
    for d in &args.delta {
        match DeltaParam::parse(d) {
            Ok(d) => deltas.push(d),
            Err(e) => return diagnostic("invalid_request", e),
        }
    }
    let mut algs = Vec::new();
    for a in &args.alg {
        match AlgorithmId::parse(a) {
            Ok(a) => algs.push(a),
            Err(e) => return diagnostic("invalid_request", e),
        }
    }
    if args.n.iter().any(|&n| n < 2) {
        return diagnostic("invalid_request", "n must be at least 2");
    }
    let workers = std::env::var("MEDIAN_ADVERSARY_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or(args.workers);
    let plan = SweepPlan {
        ns: args.n.clone(),
        deltas,
        algs,
        budget: args.budget,
        full_validate: args.full_validate,
    };
    let records = run_sweep(&plan, workers);
    let mut out = String::new();
    match args.format {
        Format::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in &records {
                out.push_str(&r.csv_row());
                out.push('\n');
            }
        }
        Format::Jsonl => {
            for r in &records {
                out.push_str(&serde_json::to_string(r).expect("record serializes"));
                out.push('\n');
            }
        }
    }
    match &args.out {
        Some(path) => {
            if let Err(e) = fs::write(path, out) {
                return diagnostic("io_error", e);
            }
        }
        None => {
            print!("{out}");
            std::io::stdout().flush().ok();
        }
    }
    ExitCode::SUCCESS
}

fn cmd_validate(args: ValidateArgs) -> ExitCode {
    let text = match fs::read_to_string(&args.path) {
        Ok(t) => t,
        Err(e) => return diagnostic("io_error", e),
    };
    let matrix = match DenseMetric::parse_text(&text) {
        Ok(m) => m,
        Err(e) => return diagnostic("parse_error", e),
    };
    let mode = match args.mode {
        Mode::Full => ValidateMode::Full,
        Mode::Structured => ValidateMode::Structured,
    };
    match validate_metric(&matrix, mode) {
        Ok(report) => {
            println!(
                "{}",
                serde_json::to_string(&report).expect("report serializes")
            );
            if report.all_ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VALIDATION)
            }
        }
        Err(e) => diagnostic("validation_failed", e),
    }
}

fn cmd_recover(args: RecoverArgs) -> ExitCode {
    let (instance, record): (FinalizedInstance, Option<RunRecord>) = match &args.instance {
        Some(path) => {
            let text = match fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return diagnostic("io_error", e),
            };
            let export = match serde_json::from_str(&text) {
                Ok(e) => e,
                Err(e) => return diagnostic("parse_error", e),
            };
            match FinalizedInstance::from_export(&export) {
                Ok(inst) => (inst, None),
                Err(e) => return diagnostic("parse_error", e),
            }
        }
        None => {
            let (n, delta, alg) = match (&args.n, &args.delta, &args.alg) {
                (Some(n), Some(d), Some(a)) => (*n, d.as_str(), a.as_str()),
                _ => {
                    return diagnostic(
                        "invalid_request",
                        "recover needs --instance or all of --n/--delta/--alg",
                    )
                }
            };
            let (delta, alg) = match parse_run_inputs(n, delta, alg) {
                Ok(v) => v,
                Err(code) => return code,
            };
            let opts = RunOptions::new(n, delta, alg);
            match perform_run(&opts) {
                Ok(output) => match output.artifacts {
                    Some(artifacts) => (artifacts.instance, Some(output.record)),
                    None => {
                        println!(
                            "{}",
                            serde_json::to_string(&output.record).expect("record serializes")
                        );
                        return ExitCode::from(EXIT_PREMISE);
                    }
                },
                Err(err) => return harness_failure(err),
            }
        }
    };

    let query_set = match &args.query_file {
        Some(path) => {
            let text = match fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return diagnostic("io_error", e),
            };
            match QuerySet::parse_text(&text) {
                Ok(q) if q.n() == instance.n() => q,
                Ok(q) => {
                    return diagnostic(
                        "invalid_request",
                        format!(
                            "query set is over {} points, instance has {}",
                            q.n(),
                            instance.n()
                        ),
                    )
                }
                Err(e) => return diagnostic("parse_error", e),
            }
        }
        None => match args.query_source {
            QuerySource::Run => build_query_graph(&instance, instance.query_seq()),
            QuerySource::AllPairs => all_pairs(&instance),
        },
    };
    if let Some(path) = &args.export_query_set {
        if let Err(e) = fs::write(path, query_set.to_text()) {
            return diagnostic("io_error", e);
        }
    }
    let audit = match chain_audit(&instance, &query_set) {
        Ok(a) => a,
        Err(e @ RecoveryError::Disconnected { .. }) => return diagnostic("disconnected", e),
        Err(e) => return diagnostic("recovery_failed", e),
    };
    let l1_relative_error = match audit.l1_relative_error() {
        Ok(r) => r.to_string(),
        Err(e) => return diagnostic("recovery_failed", e),
    };
    let payload = json!({
        "n": audit.n,
        "query_edges": query_set.len(),
        "l1_relative_error": l1_relative_error,
        "median_from_completion": audit.z_tilde,
        "cost_d_ztilde": audit.cost_d_ztilde,
        "cost_dq_ztilde": audit.cost_dq_ztilde,
        "z_star": audit.z_star,
        "cost_d_zstar": audit.cost_d_zstar,
        "dominates": audit.dominates,
        "median_cost_dominated": audit.median_cost_dominated(),
        "mean_bound_ok": audit.mean_bound_ok(),
        "norm_bound_ok": audit.norm_bound_ok(),
        "run": record,
    });
    println!("{payload}");
    if audit.all_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INTERNAL)
    }
}
