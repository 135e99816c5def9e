//! Command-line front end: `solve` runs one method on one problem, `bench`
//! runs the stopping-rule and method grids and writes a trace per cell.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::driver::{solve, Method, SolveReport, SolverOptions};
use crate::error::{Error, Result};
use crate::io::{read_dense_csv, read_libsvm, write_trace};
use crate::problem::CompositeProblem;
use crate::problems::{
    make_inverse_covariance, make_lasso, make_logistic, standardized_covariance, InverseCovarianceProblem,
    LogisticL1Problem, QuadraticL1Problem, SyntheticSpec,
};
use crate::subproblem::SubproblemPolicy;

/// Exit status for malformed command lines (BSD `EX_USAGE`).
pub const EXIT_USAGE: i32 = 64;
/// Exit status for unreadable or malformed input and unwritable output.
pub const EXIT_IO: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "proxnewton",
    version,
    about = "Proximal Newton-type solvers for composite convex problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem instance and write its trace.
    Solve(SolveArgs),
    /// Run the stopping-rule grid (inverse covariance) and the method grid
    /// (logistic regression).
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemKind {
    Lasso,
    Logistic,
    Invcov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Synthetic {
    seed: u64,
    n: usize,
    s: usize,
}

fn parse_synthetic(text: &str) -> std::result::Result<Synthetic, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [seed, n, s] = parts.as_slice() else {
        return Err(format!("expected SEED,n,s, got `{text}`"));
    };
    let seed = seed.parse().map_err(|_| format!("bad seed `{seed}`"))?;
    let n: usize = n.parse().map_err(|_| format!("bad dimension `{n}`"))?;
    let s: usize = s.parse().map_err(|_| format!("bad sample count `{s}`"))?;
    if n == 0 || s == 0 {
        return Err("dimension and sample count must be positive".into());
    }
    Ok(Synthetic { seed, n, s })
}

fn parse_method(text: &str) -> std::result::Result<Method, String> {
    Method::from_str(text).map_err(|e| e.to_string())
}

fn parse_policy(text: &str) -> std::result::Result<SubproblemPolicy, String> {
    SubproblemPolicy::from_str(text).map_err(|e| e.to_string())
}

fn positive(text: &str) -> std::result::Result<f64, String> {
    match text.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{text}`")),
    }
}

fn nonnegative(text: &str) -> std::result::Result<f64, String> {
    match text.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a nonnegative number, got `{text}`")),
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    problem: ProblemKind,
    /// LIBSVM file (lasso, logistic) or dense CSV of samples, one observation
    /// per row (invcov).
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    data: Option<PathBuf>,
    /// Seeded instance: SEED,n,s with n features (matrix order for invcov)
    /// and s samples.
    #[arg(long, value_parser = parse_synthetic)]
    synthetic: Option<Synthetic>,
    #[arg(long, value_parser = positive)]
    lambda: f64,
    /// prox-newton, prox-bfgs, prox-lbfgs, fista or sparsa.
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// L-BFGS memory (prox-lbfgs only).
    #[arg(long)]
    memory: Option<usize>,
    /// adaptive, exact or fixed:N.
    #[arg(long = "subproblem-stop", value_parser = parse_policy)]
    subproblem_stop: SubproblemPolicy,
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    tol: f64,
    #[arg(long = "max-outer", default_value_t = 500)]
    max_outer: usize,
    /// Sufficient-decrease constant of the line search.
    #[arg(long, default_value_t = 1e-4, value_parser = positive)]
    alpha: f64,
    /// Ridge term added to the logistic loss.
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    ridge: f64,
    /// Seed for the solver's randomized probes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write zeros in the elapsed_sec column so that traces are byte-reproducible.
    #[arg(long = "no-clock")]
    no_clock: bool,
    /// Output CSV; the JSON summary is written next to it.
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    All,
    Invcov,
    Logistic,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Directory for per-cell traces and the summary table.
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Family::All)]
    family: Family,
    /// Seed of the synthetic instances.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Curvature model for the stopping-rule grid.
    #[arg(long = "invcov-method", default_value = "prox-bfgs", value_parser = parse_method)]
    invcov_method: Method,
    #[arg(long = "max-outer", default_value_t = 500)]
    max_outer: usize,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long = "no-clock")]
    no_clock: bool,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => run_solve(&a),
        Command::Bench(a) => run_bench(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Contract(_) | Error::DimensionMismatch { .. } => EXIT_USAGE,
        _ => EXIT_IO,
    }
}

enum Instance {
    Lasso(QuadraticL1Problem),
    Logistic(LogisticL1Problem),
    Invcov(InverseCovarianceProblem),
}

impl Instance {
    fn composite(&self) -> CompositeProblem {
        match self {
            Instance::Lasso(p) => p.composite(),
            Instance::Logistic(p) => p.composite(),
            Instance::Invcov(p) => p.composite(),
        }
    }
}

fn build_instance(a: &SolveArgs) -> Result<Instance> {
    match (a.problem, &a.data, a.synthetic) {
        (ProblemKind::Lasso, Some(path), _) => {
            let d = read_libsvm(path, None)?;
            Ok(Instance::Lasso(QuadraticL1Problem::new(d.design, d.labels, a.lambda)?))
        }
        (ProblemKind::Lasso, None, Some(s)) => Ok(Instance::Lasso(make_lasso(
            &SyntheticSpec::lasso(s.seed, s.n, s.s),
            a.lambda,
        )?)),
        (ProblemKind::Logistic, Some(path), _) => {
            let d = read_libsvm(path, None)?;
            Ok(Instance::Logistic(LogisticL1Problem::new(
                d.design,
                d.labels.as_slice(),
                a.lambda,
                a.ridge,
            )?))
        }
        (ProblemKind::Logistic, None, Some(s)) => Ok(Instance::Logistic(make_logistic(
            &SyntheticSpec::logistic(s.seed, s.n, s.s),
            a.lambda,
            a.ridge,
        )?)),
        (ProblemKind::Invcov, Some(path), _) => {
            let samples = read_dense_csv(path)?;
            if samples.nrows() < 2 || samples.ncols() < 2 {
                return Err(Error::Parse {
                    line: 0,
                    message: "need at least two samples of at least two variables".into(),
                });
            }
            Ok(Instance::Invcov(InverseCovarianceProblem::new(
                standardized_covariance(samples),
                a.lambda,
            )?))
        }
        (ProblemKind::Invcov, None, Some(s)) => Ok(Instance::Invcov(make_inverse_covariance(
            &SyntheticSpec::inverse_covariance(s.seed, s.n, s.s),
            a.lambda,
        )?)),
        (_, None, None) => Err(Error::Contract("one of --data or --synthetic is required".into())),
    }
}

fn solve_options(a: &SolveArgs) -> Result<SolverOptions> {
    let method = match (a.method, a.memory) {
        (Method::ProxLbfgs { .. }, Some(memory)) => Method::ProxLbfgs { memory },
        (_, Some(_)) => return Err(Error::Contract("--memory applies to prox-lbfgs only".into())),
        (m, None) => m,
    };
    let mut o = SolverOptions::new(method, a.subproblem_stop);
    o.tol = a.tol;
    o.max_outer = a.max_outer;
    o.linesearch.alpha = a.alpha;
    o.seed = a.seed;
    o.record_clock = !a.no_clock;
    o.validate()?;
    Ok(o)
}

fn run_solve(a: &SolveArgs) -> Result<i32> {
    let options = solve_options(a)?;
    let instance = build_instance(a)?;
    let report = solve(&instance.composite(), &options)?;
    write_trace(&report, &a.trace)?;
    println!(
        "status={} iterations={} f={:.12e} norm_Gf={:.3e} inner={} fev={}",
        report.status,
        report.iterations(),
        report.f_final,
        report.norm_gf_final,
        report.diagnostics.total_inner_iterations,
        report.counts.fev,
    );
    Ok(report.status.exit_code())
}

struct Cell {
    family: &'static str,
    problem: CompositeProblem,
    options: SolverOptions,
}

struct CellResult {
    family: &'static str,
    trace: PathBuf,
    report: Result<SolveReport>,
}

fn cell_file(family: &str, options: &SolverOptions) -> String {
    let policy = options.policy.to_string().replace(':', "");
    format!("{family}-{}-{policy}.csv", options.method.cli_name())
}

fn bench_cells(a: &BenchArgs) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    let base = |method, policy| {
        let mut o = SolverOptions::new(method, policy);
        o.max_outer = a.max_outer;
        o.record_clock = !a.no_clock;
        o
    };
    if matches!(a.family, Family::All | Family::Invcov) {
        let ic = make_inverse_covariance(&SyntheticSpec::inverse_covariance(a.seed, 30, 40), 0.1)?;
        let problem = ic.composite();
        for policy in [
            SubproblemPolicy::adaptive(),
            SubproblemPolicy::exact(),
            SubproblemPolicy::fixed(10),
        ] {
            cells.push(Cell {
                family: "invcov",
                problem: problem.clone(),
                options: base(a.invcov_method, policy),
            });
        }
    }
    if matches!(a.family, Family::All | Family::Logistic) {
        let lg = make_logistic(&SyntheticSpec::logistic(a.seed, 50, 200), 0.01, 1e-3)?;
        let problem = lg.composite();
        for method in [
            Method::ProxNewton,
            Method::ProxBfgs,
            Method::prox_lbfgs(),
            Method::Fista,
            Method::Sparsa,
        ] {
            cells.push(Cell {
                family: "logistic",
                problem: problem.clone(),
                options: base(method, SubproblemPolicy::adaptive()),
            });
        }
    }
    Ok(cells)
}

fn run_cell(cell: &Cell, out: &Path) -> CellResult {
    let trace = out.join(cell_file(cell.family, &cell.options));
    let report = solve(&cell.problem, &cell.options).and_then(|r| {
        write_trace(&r, &trace)?;
        Ok(r)
    });
    CellResult {
        family: cell.family,
        trace,
        report,
    }
}

const SUMMARY_HEADER: &str =
    "family,method,policy,status,iterations,inner_iters,cum_fev,cum_gev,cum_prox,f_final,norm_Gf_final,wall_sec,trace";

fn summary_row(r: &CellResult) -> String {
    let file = r
        .trace
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    match &r.report {
        Ok(rep) => format!(
            "{},{},{},{},{},{},{},{},{},{:.16e},{:.16e},{:.6},{}",
            r.family,
            rep.method,
            rep.policy,
            rep.status,
            rep.iterations(),
            rep.diagnostics.total_inner_iterations,
            rep.counts.fev,
            rep.counts.gev,
            rep.counts.prox,
            rep.f_final,
            rep.norm_gf_final,
            rep.wall_sec,
            file
        ),
        Err(e) => format!(
            "{},,,error: {},,,,,,,,,{}",
            r.family,
            e.to_string().replace(',', ";"),
            file
        ),
    }
}

fn run_bench(a: &BenchArgs) -> Result<i32> {
    fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    let cells = bench_cells(a)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Error::Contract(format!("cannot start worker pool: {e}")))?;
    let results: Vec<CellResult> = pool.install(|| cells.par_iter().map(|c| run_cell(c, &a.out)).collect());

    let mut table = String::new();
    let _ = writeln!(table, "{SUMMARY_HEADER}");
    for r in &results {
        let _ = writeln!(table, "{}", summary_row(r));
    }
    let summary = a.out.join("summary.csv");
    fs::write(&summary, &table).map_err(|e| Error::Io {
        path: summary.clone(),
        source: e,
    })?;

    println!(
        "{:<9} {:<16} {:<9} {:<18} {:>6} {:>7} {:>7} {:>11}",
        "family", "method", "policy", "status", "iters", "inner", "fev", "norm_Gf"
    );
    let mut failed = false;
    for r in &results {
        match &r.report {
            Ok(rep) => println!(
                "{:<9} {:<16} {:<9} {:<18} {:>6} {:>7} {:>7} {:>11.3e}",
                r.family,
                rep.method.to_string(),
                rep.policy.to_string(),
                rep.status.to_string(),
                rep.iterations(),
                rep.diagnostics.total_inner_iterations,
                rep.counts.fev,
                rep.norm_gf_final
            ),
            Err(e) => {
                failed = true;
                eprintln!("{}: {e}", r.trace.display());
            }
        }
    }
    Ok(if failed { EXIT_IO } else { 0 })
}
