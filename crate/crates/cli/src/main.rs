//! `daebvp`: analyze, solve and verify linear DAE boundary value problems
//! stored as JSON files.

mod commands;
mod csv;
mod problem;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use daebvp_core::bvp::{DEFAULT_CONSISTENCY_TOL, DEFAULT_STRUCTURE_TOL};
use daebvp_core::{ResidualTolerances, SolverOptions};

use commands::{Corruption, Exit, Outcome, Settings};
use problem::Mode;

#[derive(Debug, Parser)]
#[command(name = "daebvp", version, about = "Boundary value problems for linear DAEs E x' = A x + f, B x(0) + C x(T) = d")]
#[command(after_help = "Exit codes: 0 success, 1 malformed input, 2 pencil not regular, \
3 no unique solution or inconsistent initial value, 4 E = 0, 5 verification failed.")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Number of files processed in parallel when several are given.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Regularity, index and decomposition diagnostics of the pencil (E, A).
    Analyze {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        opts: SolverArgs,
    },
    /// Solve a boundary value problem; samples go to CSV, the summary to JSON.
    Solve(SolveArgs),
    /// Solve an initial value problem (mode "ivp"); same outputs as `solve`.
    Ivp(SolveArgs),
    /// Re-solve and check the equation, boundary and derivative residuals.
    Verify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Also compare the samples in this CSV file against the solution.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        opts: SolverArgs,
        #[command(flatten)]
        check: CheckArgs,
        #[arg(long, hide = true)]
        corrupt_coordinate: Option<usize>,
        #[arg(long, hide = true, default_value_t = 1e-3, allow_negative_numbers = true)]
        corrupt_offset: f64,
    },
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// CSV destination; a directory when several files are given. Without
    /// it the CSV goes to stdout and the JSON summary to stderr.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    opts: SolverArgs,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Shift λ* for the decomposition instead of the best probe point.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Relative singular value threshold for every rank decision
    /// [default: n·ε, scaled by cond(λ*E - A) for the index chain].
    #[arg(long, value_parser = positive)]
    rank_tol: Option<f64>,
    /// Relative tolerance on the rows of [BQ CQ d] that must vanish.
    #[arg(long, default_value_t = DEFAULT_STRUCTURE_TOL, value_parser = positive)]
    structure_tol: f64,
    /// Shooting matrices with a larger condition estimate count as
    /// singular [default: 1/(1e3·n·ε)].
    #[arg(long, value_parser = positive)]
    max_cond: Option<f64>,
    /// Relative tolerance on ‖x(0) - d‖ for initial value problems.
    #[arg(long, default_value_t = DEFAULT_CONSISTENCY_TOL, value_parser = positive)]
    consistency_tol: f64,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Number of Chebyshev intervals; samples and checks use N + 1 points.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..))]
    grid: u32,
    /// Relative tolerance of the equation and boundary residual checks.
    #[arg(long, env = "DAEBVP_TOL", default_value_t = 1e-8, value_parser = positive)]
    tol: f64,
    /// Relative tolerance of the finite-difference derivative check.
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    fd_tol: f64,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {v}"))
    }
}

fn settings(opts: &SolverArgs, check: Option<&CheckArgs>) -> Settings {
    let solver = SolverOptions {
        rank_tol: commands::rank_tolerance(opts.rank_tol),
        lambda: opts.lambda,
        structure_tol: opts.structure_tol,
        max_condition: opts.max_cond,
        consistency_tol: opts.consistency_tol,
    };
    let (tolerances, grid) = match check {
        Some(c) => (
            ResidualTolerances { equation: c.tol, boundary: c.tol, derivative: c.fd_tol },
            c.grid as usize,
        ),
        None => (ResidualTolerances::default(), 32),
    };
    Settings { solver, tolerances, grid }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

// Output to a closed pipe is dropped.
fn stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn stderr(text: &str) {
    let _ = std::io::stderr().lock().write_all(text.as_bytes());
}

/// Runs `job` on every file, `jobs` at a time, keeping the input order.
fn run_all<F>(files: &[PathBuf], jobs: u32, job: F) -> Vec<Outcome>
where
    F: Fn(&Path) -> Outcome + Sync,
{
    let jobs = (jobs as usize).clamp(1, files.len().max(1));
    if jobs == 1 {
        return files.iter().map(|f| job(f)).collect();
    }
    let chunk = files.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let handles: Vec<_> = files
            .chunks(chunk)
            .map(|part| scope.spawn(|| part.iter().map(|f| job(f)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker thread panicked")).collect()
    })
}

fn csv_path(dir: &Path, file: &Path) -> PathBuf {
    let stem = file.file_stem().map_or_else(|| "solution".into(), |s| s.to_string_lossy().into_owned());
    dir.join(format!("{stem}.csv"))
}

fn write_csv(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Prints the outcome of a single file and returns its exit code.
fn finish_single(outcome: Outcome, output: Option<&Path>) -> Exit {
    if let Some(msg) = &outcome.message {
        eprintln!("error: {msg}");
    }
    match (&outcome.csv, output) {
        (Some(csv), Some(path)) => {
            if let Err(e) = write_csv(path, csv) {
                eprintln!("error: {e}");
                return Exit::Input;
            }
            stdout(&pretty(&outcome.report));
        }
        (Some(csv), None) => {
            stdout(csv);
            stderr(&pretty(&outcome.report));
        }
        (None, _) => stdout(&pretty(&outcome.report)),
    }
    outcome.exit
}

/// Prints a JSON array of per-file results; the exit code is the largest.
fn finish_batch(files: &[PathBuf], outcomes: Vec<Outcome>, output_dir: Option<&Path>) -> Exit {
    let mut worst = Exit::Success;
    let mut entries = Vec::with_capacity(files.len());
    if let Some(dir) = output_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("error: cannot create {}: {e}", dir.display());
            return Exit::Input;
        }
    }
    for (file, outcome) in files.iter().zip(outcomes) {
        let mut exit = outcome.exit;
        let mut csv_file = None;
        if let (Some(csv), Some(dir)) = (&outcome.csv, output_dir) {
            let path = csv_path(dir, file);
            match write_csv(&path, csv) {
                Ok(()) => csv_file = Some(path.display().to_string()),
                Err(e) => {
                    eprintln!("error: {e}");
                    exit = exit.max(Exit::Input);
                }
            }
        }
        if let Some(msg) = &outcome.message {
            eprintln!("{}: {msg}", file.display());
        }
        worst = worst.max(exit);
        entries.push(serde_json::json!({
            "file": file.display().to_string(),
            "exit_code": exit.code(),
            "csv": csv_file,
            "report": outcome.report,
        }));
    }
    stdout(&pretty(&serde_json::Value::Array(entries)));
    worst
}

fn run(cli: Cli) -> Exit {
    match cli.command {
        Command::Analyze { files, opts } => {
            let s = settings(&opts, None);
            let outcomes = run_all(&files, cli.jobs, |f| commands::analyze(f, &s));
            if files.len() == 1 {
                finish_single(outcomes.into_iter().next().expect("one outcome"), None)
            } else {
                finish_batch(&files, outcomes, None)
            }
        }
        Command::Solve(args) => solve_files(args, Mode::Bvp, cli.jobs),
        Command::Ivp(args) => solve_files(args, Mode::Ivp, cli.jobs),
        Command::Verify { files, csv, opts, check, corrupt_coordinate, corrupt_offset } => {
            let s = settings(&opts, Some(&check));
            let corruption = corrupt_coordinate.map(|coordinate| Corruption { coordinate, offset: corrupt_offset });
            let outcomes = run_all(&files, cli.jobs, |f| commands::verify(f, csv.as_ref(), &s, corruption));
            if files.len() == 1 {
                finish_single(outcomes.into_iter().next().expect("one outcome"), None)
            } else {
                finish_batch(&files, outcomes, None)
            }
        }
    }
}

fn solve_files(args: SolveArgs, mode: Mode, jobs: u32) -> Exit {
    let s = settings(&args.opts, Some(&args.check));
    let outcomes = run_all(&args.files, jobs, |f| commands::solve(f, &s, mode));
    if args.files.len() == 1 {
        finish_single(outcomes.into_iter().next().expect("one outcome"), args.output.as_deref())
    } else {
        finish_batch(&args.files, outcomes, args.output.as_deref())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Exit::Input.code() } else { 0 };
            e.print().expect("write to terminal");
            return ExitCode::from(code as u8);
        }
    };
    ExitCode::from(run(cli).code() as u8)
}
