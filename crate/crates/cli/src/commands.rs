use std::path::{Path, PathBuf};

use daebvp_core::pencil::DecompositionDiagnostics;
use daebvp_core::{
    check_regularity, quasi_weierstrass_at, residual_check, solve_bvp, solve_ivp, Error, Perturbed, RankTolerance,
    ResidualReport, ResidualTolerances, SolutionBundle, SolveDiagnostics, SolverOptions, Trajectory,
};
use serde::Serialize;
use serde_json::Value;

use crate::csv;
use crate::problem::{self, InputError, Mode, Problem};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Exit {
    Success = 0,
    Input = 1,
    NotRegular = 2,
    Unsolvable = 3,
    ZeroE = 4,
    Verification = 5,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Solver and verification settings shared by all commands.
#[derive(Debug, Clone)]
pub struct Settings {
    pub solver: SolverOptions,
    pub tolerances: ResidualTolerances,
    /// Chebyshev intervals; samples are taken at `grid + 1` points.
    pub grid: usize,
}

/// Result of running one command on one file.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit: Exit,
    pub report: Value,
    pub csv: Option<String>,
    /// Human-readable explanation of a failure.
    pub message: Option<String>,
}

impl Outcome {
    fn ok(exit: Exit, report: impl Serialize) -> Self {
        Self { exit, report: to_value(report), csv: None, message: None }
    }

    fn failure(exit: Exit, reason: &str, message: String) -> Self {
        let report = serde_json::json!({
            "status": "failed",
            "reason": reason,
            "message": message,
            "exit_code": exit.code(),
        });
        Self { exit, report, csv: None, message: Some(format!("{reason}: {message}")) }
    }

    fn input(err: InputError) -> Self {
        Self::failure(Exit::Input, "input", err.to_string())
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialize to JSON")
}

fn vec_of(v: &nalgebra::DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Maps a solver error to an exit code and a short reason.
pub fn classify(err: &Error) -> (Exit, &'static str) {
    match err {
        Error::DimensionMismatch { .. } | Error::NonFinite(_) | Error::InvalidHorizon(_) => (Exit::Input, "input"),
        Error::NotRegular => (Exit::NotRegular, "regularity"),
        Error::ZeroEMatrix => (Exit::ZeroE, "E = 0"),
        Error::SingularShootingMatrix { .. } => (Exit::Unsolvable, "singular shooting matrix"),
        Error::IncompatibleBoundaryStructure { .. } => (Exit::Unsolvable, "boundary structure"),
        Error::InconsistentInitialValue { .. } => (Exit::Unsolvable, "inconsistent initial value"),
        Error::SingularTransform { .. } | Error::DecompositionFailed { .. } => (Exit::Unsolvable, "decomposition"),
        Error::Overflow { .. } => (Exit::Unsolvable, "overflow"),
        Error::OracleSingular { .. } | Error::SizeLimitExceeded { .. } => (Exit::Unsolvable, "oracle"),
    }
}

fn solver_failure(err: &Error) -> Outcome {
    let (exit, reason) = classify(err);
    Outcome::failure(exit, reason, err.to_string())
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    regular: bool,
    n: usize,
    e_is_zero: bool,
    n1: Option<usize>,
    n2: Option<usize>,
    nu: Option<usize>,
    lambda_star: Option<f64>,
    rank_threshold: Option<f64>,
    /// `[λ, σ_min(λE - A)]` at every probe.
    probe_points: Vec<[f64; 2]>,
    det_poly_coeffs: Option<Vec<f64>>,
    decomposition: Option<DecompositionDiagnostics>,
}

pub fn analyze(path: &Path, settings: &Settings) -> Outcome {
    let prob = match problem::load(path) {
        Ok(p) => p,
        Err(e) => return Outcome::input(e),
    };
    let pencil = prob.pencil();
    let tol = settings.solver.rank_tol;
    let cert = check_regularity(pencil, tol);
    let mut report = AnalyzeReport {
        regular: cert.regular,
        n: pencil.dim(),
        e_is_zero: pencil.is_e_zero(),
        n1: None,
        n2: None,
        nu: None,
        lambda_star: None,
        rank_threshold: cert.rank_threshold,
        probe_points: cert.probe_points.iter().map(|&(l, s)| [l, s]).collect(),
        det_poly_coeffs: cert.det_poly_coeffs.clone(),
        decomposition: None,
    };
    if !cert.regular {
        let mut out = Outcome::ok(Exit::NotRegular, &report);
        out.message = Some("regularity: the pencil (E, A) is not regular".into());
        return out;
    }
    let lambda = settings.solver.lambda.or(cert.chosen_lambda).expect("regular certificate has a shift");
    match quasi_weierstrass_at(pencil, lambda, tol) {
        Ok(d) => {
            report.n1 = Some(d.n1());
            report.n2 = Some(d.n2());
            report.nu = Some(d.nu());
            report.lambda_star = Some(d.lambda_star());
            report.decomposition = Some(d.diagnostics().clone());
            Outcome::ok(Exit::Success, &report)
        }
        Err(e) => solver_failure(&e),
    }
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    status: &'static str,
    mode: Mode,
    n: usize,
    n1: usize,
    n2: usize,
    nu: usize,
    lambda_star: f64,
    mu_tilde_1: Vec<f64>,
    mu_tilde_2: Vec<f64>,
    mu: Vec<f64>,
    cond_shooting: f64,
    samples: usize,
    residuals: ResidualReport,
    diagnostics: SolveDiagnostics,
}

fn solve_problem(prob: &Problem, settings: &Settings) -> Result<SolutionBundle, Error> {
    match prob {
        Problem::Bvp(p) => solve_bvp(p, &settings.solver),
        Problem::Ivp { pencil, x0, horizon, forcing } => solve_ivp(pencil, x0, *horizon, forcing, &settings.solver),
    }
}

/// `solve` (mode bvp) and `ivp` (mode ivp).
pub fn solve(path: &Path, settings: &Settings, mode: Mode) -> Outcome {
    let prob = match problem::load(path) {
        Ok(p) => p,
        Err(e) => return Outcome::input(e),
    };
    let file_mode = match prob {
        Problem::Bvp(_) => Mode::Bvp,
        Problem::Ivp { .. } => Mode::Ivp,
    };
    if file_mode != mode {
        let (name, command) = match file_mode {
            Mode::Bvp => ("bvp", "solve"),
            Mode::Ivp => ("ivp", "ivp"),
        };
        return Outcome::input(InputError::Field {
            field: "mode".into(),
            message: format!("the file is a {name} problem; use `daebvp {command}`"),
        });
    }
    let sol = match solve_problem(&prob, settings) {
        Ok(s) => s,
        Err(e) => return solver_failure(&e),
    };
    let bvp = prob.as_bvp();
    let residuals = residual_check(&bvp, &sol, settings.grid + 1, settings.tolerances);
    let d = sol.diagnostics();
    let summary = SolveSummary {
        status: "solved",
        mode,
        n: prob.dim(),
        n1: d.n1,
        n2: d.n2,
        nu: d.nu,
        lambda_star: d.lambda_star,
        mu_tilde_1: vec_of(sol.mu1()),
        mu_tilde_2: vec_of(sol.mu2()),
        mu: vec_of(&sol.mu()),
        cond_shooting: d.cond_shooting,
        samples: settings.grid + 1,
        residuals,
        diagnostics: d.clone(),
    };
    let csv = csv::write(&bvp, &sol, settings.grid + 1);
    let mut out = Outcome::ok(Exit::Success, summary);
    out.csv = Some(csv);
    out
}

/// Deliberate corruption of the verified trajectory, for testing the
/// verifier itself.
#[derive(Debug, Clone, Copy)]
pub struct Corruption {
    pub coordinate: usize,
    pub offset: f64,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    passed: bool,
    residuals: ResidualReport,
    csv: Option<csv::Comparison>,
}

pub fn verify(path: &Path, csv_path: Option<&PathBuf>, settings: &Settings, corruption: Option<Corruption>) -> Outcome {
    let prob = match problem::load(path) {
        Ok(p) => p,
        Err(e) => return Outcome::input(e),
    };
    let sol = match solve_problem(&prob, settings) {
        Ok(s) => s,
        Err(e) => return solver_failure(&e),
    };
    let bvp = prob.as_bvp();
    let candidate: Box<dyn Trajectory + '_> = match corruption {
        Some(c) if c.coordinate < prob.dim() => Box::new(Perturbed::new(&sol, c.coordinate, c.offset)),
        Some(c) => {
            return Outcome::input(InputError::Field {
                field: "--corrupt-coordinate".into(),
                message: format!("coordinate {} out of range for n = {}", c.coordinate, prob.dim()),
            })
        }
        None => Box::new(&sol),
    };
    let residuals = residual_check(&bvp, candidate.as_ref(), settings.grid + 1, settings.tolerances);
    let comparison = match csv_path {
        Some(p) => match csv::compare_file(p, candidate.as_ref(), settings.tolerances.equation) {
            Ok(c) => Some(c),
            Err(e) => return Outcome::input(e),
        },
        None => None,
    };
    let passed = residuals.passed && comparison.as_ref().is_none_or(|c| c.passed);
    let report = VerifyReport { passed, residuals, csv: comparison };
    let mut out = Outcome::ok(if passed { Exit::Success } else { Exit::Verification }, report);
    if !passed {
        out.message = Some("verification failed: residuals exceed their thresholds".into());
    }
    out
}

/// The rank tolerance selected on the command line.
pub fn rank_tolerance(relative: Option<f64>) -> RankTolerance {
    relative.map_or(RankTolerance::Default, RankTolerance::Relative)
}
