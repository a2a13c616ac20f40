use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use monosplit_harness::bench::{run_benchmark, sweep, SweepFamily, SUITES};
use monosplit_harness::generate::{generate, ProblemKind, ProblemSpec};
use monosplit_harness::methods::{run_method, RunOptions, RunOutcome};
use monosplit_harness::rate::estimate_rate;
use monosplit_harness::trace_io::write_trace;
use monosplit_harness::{HarnessError, Result};

#[derive(Parser)]
#[command(
    name = "monosplit",
    version,
    about = "Splitting solvers for monotone and saddle point problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one generated problem and optionally write its trace.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        method: String,
        /// Step size, or `auto` for the scheme's default.
        #[arg(long, default_value = "auto")]
        alpha: String,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Run a step size outside the rate guarantee instead of rejecting it.
        #[arg(long)]
        allow_unguaranteed: bool,
    },
    /// Run a benchmark suite and write its JSON report.
    Bench {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iteration counts to a 1e-8 relative residual across condition numbers.
    Sweep {
        #[arg(long)]
        kind: String,
        #[arg(long, value_delimiter = ',', required = true)]
        kappa_list: Vec<f64>,
        #[arg(long)]
        method: String,
        #[arg(long)]
        out: PathBuf,
        /// `dim` for monotone kinds, `m` for saddle kinds.
        #[arg(long, default_value_t = 50)]
        dim: usize,
        /// Dual dimension for saddle kinds.
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// `kappa_bsym` for monotone kinds, `kappa_s` for saddle kinds.
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        /// Use `I_Q = S` for saddle methods.
        #[arg(long)]
        schur_metric: bool,
    },
    /// Run several methods on one problem and print a summary table.
    Compare {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<String>,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

/// Ran to completion; `false` means a checked claim failed.
type Outcome = Result<bool>;

fn load_spec(path: &Path) -> Result<ProblemSpec> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

fn parse_alpha(s: &str) -> Result<Option<f64>> {
    if s == "auto" {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(a) if a > 0.0 && a.is_finite() => Ok(Some(a)),
        _ => Err(HarnessError::Usage(format!(
            "--alpha must be a positive number or `auto`, got `{s}`"
        ))),
    }
}

fn summary_line(out: &RunOutcome) -> String {
    let last = out.trace.entries.last();
    let rate = estimate_rate(&out.trace.lyapunov_values())
        .map(|f| format!("{:.6}", f.rho_hat))
        .unwrap_or_else(|_| "-".into());
    format!(
        "{:<18} {:>8} {:>12.3e} {:>12} {:>10} {:>5} {:>5}",
        out.method,
        out.trace.iterations(),
        last.map_or(f64::NAN, |e| e.residual),
        last.and_then(|e| e.err_norm)
            .map_or("-".into(), |e| format!("{e:.3e}")),
        rate,
        out.trace.census.symmetric_solves,
        out.trace.census.skew_solves,
    )
}

const TABLE_HEADER: &str =
    "method             iters     residual     err_norm   rate_fit  symS  skwS";

fn solve(
    problem: &Path,
    method: &str,
    alpha: &str,
    max_iter: usize,
    tol: f64,
    trace: Option<&Path>,
    allow_unguaranteed: bool,
) -> Outcome {
    let inst = generate(&load_spec(problem)?)?;
    let opts = RunOptions {
        alpha: parse_alpha(alpha)?,
        max_iter,
        tol,
        allow_unguaranteed,
    };
    let out = run_method(&inst, method, &opts)?;
    for w in &out.trace.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = trace {
        write_trace(&out.trace, BufWriter::new(File::create(path)?))?;
        info!("trace written to {}", path.display());
    }
    println!("{TABLE_HEADER}");
    println!("{}", summary_line(&out));
    Ok(out.converged(tol))
}

fn bench(suite: &str, out: Option<&Path>) -> Outcome {
    let report = run_benchmark(suite)?;
    let json = report.to_json()?;
    match out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    for a in report.failures() {
        eprintln!(
            "FAIL {}: observed {:e}, expected {:e} (tol {:e})",
            a.name, a.observed, a.expected, a.tolerance
        );
    }
    eprintln!(
        "{}: {} assertions, {} failed",
        if suite.is_empty() { "empty" } else { suite },
        report.assertions.len(),
        report.failures().len()
    );
    Ok(report.passed())
}

#[allow(clippy::too_many_arguments)]
fn run_sweep(
    kind: &str,
    kappas: &[f64],
    method: &str,
    out: &Path,
    dim: usize,
    n: usize,
    coupling: f64,
    seeds: &[u64],
    schur_metric: bool,
) -> Outcome {
    let kind = ProblemKind::parse(kind)
        .ok_or_else(|| HarnessError::Usage(format!("unknown problem kind `{kind}`")))?;
    let family = SweepFamily {
        kind,
        dim: (dim, n),
        coupling,
        schur_metric,
    };
    let rows = sweep(&family, method, kappas, seeds)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out)?));
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(true)
}

fn compare(problem: &Path, methods: &[String], max_iter: usize, tol: f64) -> Outcome {
    let inst = generate(&load_spec(problem)?)?;
    let opts = RunOptions {
        max_iter,
        tol,
        ..Default::default()
    };
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{TABLE_HEADER}")?;
    let mut all = true;
    for m in methods {
        match run_method(&inst, m, &opts) {
            Ok(out) => {
                all &= out.converged(tol);
                writeln!(stdout, "{}", summary_line(&out))?;
            }
            Err(HarnessError::Numerical(e)) => {
                all = false;
                writeln!(stdout, "{m:<18} failed: {e}")?;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(all)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve {
            problem,
            method,
            alpha,
            max_iter,
            tol,
            trace,
            allow_unguaranteed,
        } => solve(
            problem,
            method,
            alpha,
            *max_iter,
            *tol,
            trace.as_deref(),
            *allow_unguaranteed,
        ),
        Command::Bench { suite, out } => {
            if !suite.is_empty() && suite != "empty" && !SUITES.contains(&suite.as_str()) {
                Err(HarnessError::Usage(format!(
                    "unknown suite `{suite}`; expected one of {}",
                    SUITES.join(", ")
                )))
            } else {
                bench(suite, out.as_deref())
            }
        }
        Command::Sweep {
            kind,
            kappa_list,
            method,
            out,
            dim,
            n,
            coupling,
            seeds,
            schur_metric,
        } => run_sweep(
            kind,
            kappa_list,
            method,
            out,
            *dim,
            *n,
            *coupling,
            seeds,
            *schur_metric,
        ),
        Command::Compare {
            problem,
            methods,
            max_iter,
            tol,
        } => compare(problem, methods, *max_iter, *tol),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
