//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p daebvp-cli --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use daebvp_core::bvp::{build_shooting_system, solve_nilpotent_part, transform_boundary, DEFAULT_STRUCTURE_TOL};
use daebvp_core::synth::{
    initial_value, random_bvp, random_forcing, random_integer_pencil, random_pencil, singular_shooting_bvp, PencilShape,
    SyntheticBvp,
};
use daebvp_core::verify::{ode_shooting_oracle, symbolic_determinant, OracleOutcome};
use daebvp_core::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CORPUS_SIZE: usize = 500;
const CORPUS_SEED: u64 = 7;
const MAX_CONDITION: f64 = 1e4;
const RECONSTRUCTION_TOL: f64 = 1e-8;
const DECOMPOSITION_BUDGET: Duration = Duration::from_secs(10);
const SHOOTING_IDENTITY_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-8;
const CHECK_POINTS: usize = 33;
const SOLVE_BUDGET: Duration = Duration::from_secs(30);
const ODE_PROBLEMS: usize = 100;
const ORACLE_TOL: f64 = 1e-8;
const SINGULAR_PROBLEMS: usize = 50;
const CHAIN_TOL: f64 = 1e-12;
const IVP_PROBLEMS: usize = 40;
const IVP_TOL: f64 = 1e-9;
const IVP_PERTURBATION: f64 = 1e-3;
const ROUND_TRIP_TOL: f64 = 1e-12;
const INTEGER_PENCILS: usize = 200;

type Verdict = std::result::Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn corpus() -> Vec<SyntheticBvp> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    (0..CORPUS_SIZE)
        .map(|_| {
            let shape = PencilShape::random(&mut rng, 8, 3);
            random_bvp(&mut rng, shape, MAX_CONDITION)
        })
        .collect()
}

fn decompose(p: &Pencil) -> Result<QwfDecomposition> {
    let cert = check_regularity(p, RankTolerance::Default);
    if !cert.regular {
        return Err(Error::NotRegular);
    }
    quasi_weierstrass(p, &cert, RankTolerance::Default)
}

fn decomposition_correctness(corpus: &[SyntheticBvp]) -> Verdict {
    let start = Instant::now();
    let results: Vec<_> = corpus.iter().map(|sb| decompose(sb.problem.pencil())).collect();
    let elapsed = start.elapsed();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, (sb, res)) in corpus.iter().zip(&results).enumerate() {
        let shape = sb.source.shape;
        match res {
            Ok(d) => {
                let (re, ra) = d.reconstruction_residuals(sb.problem.pencil());
                worst = worst.max(re).max(ra);
                if (d.n1(), d.n2(), d.nu()) != (shape.n1, shape.n2, shape.nu) || re.max(ra) > RECONSTRUCTION_TOL {
                    failures.push(i);
                }
            }
            Err(_) => failures.push(i),
        }
    }
    check(
        failures.is_empty() && elapsed < DECOMPOSITION_BUDGET,
        format!(
            "{} pencils, {} structure or residual failures {:?}, worst residual {worst:.1e} (tol {RECONSTRUCTION_TOL:e}), {:.2} s (limit {} s)",
            corpus.len(),
            failures.len(),
            &failures[..failures.len().min(5)],
            elapsed.as_secs_f64(),
            DECOMPOSITION_BUDGET.as_secs()
        ),
    )
}

fn shooting_identity(corpus: &[SyntheticBvp]) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (i, sb) in corpus.iter().enumerate() {
        let prob = &sb.problem;
        let d = decompose(prob.pencil()).map_err(|e| format!("problem {i}: {e}"))?;
        if d.n1() == 0 {
            continue;
        }
        let tb = transform_boundary(prob, &d, DEFAULT_STRUCTURE_TOL).map_err(|e| format!("problem {i}: {e}"))?;
        let f = prob.forcing().left_multiply(d.p()).map_err(|e| format!("problem {i}: {e}"))?;
        let sys = build_shooting_system(&tb, &d, &f.rows(0, d.n1()), &f.rows(d.n1(), d.n2()), prob.horizon())
            .map_err(|e| format!("problem {i}: {e}"))?;
        let exp = matrix_exponential(&(d.j() * prob.horizon())).map_err(|e| format!("problem {i}: {e}"))?;
        let direct = &tb.b1 + &tb.c1 * exp;
        worst = worst.max((&sys.d - &direct).norm() / direct.norm());
        checked += 1;
    }
    check(
        worst <= SHOOTING_IDENTITY_TOL,
        format!("{checked} problems with n1 > 0, worst relative deviation {worst:.1e} (tol {SHOOTING_IDENTITY_TOL:e})"),
    )
}

/// Solves every corpus problem with `E ≠ 0`; shared by the end-to-end and
/// round-trip criteria.
fn solve_corpus(corpus: &[SyntheticBvp]) -> (Vec<(usize, Result<SolutionBundle>)>, Duration) {
    let start = Instant::now();
    let solved = corpus
        .iter()
        .enumerate()
        .filter(|(_, sb)| !sb.problem.pencil().is_e_zero())
        .map(|(i, sb)| (i, solve_bvp(&sb.problem, &SolverOptions::default())))
        .collect();
    (solved, start.elapsed())
}

fn end_to_end(corpus: &[SyntheticBvp], solved: &[(usize, Result<SolutionBundle>)], solve_time: Duration) -> Verdict {
    let start = Instant::now();
    let mut failures = Vec::new();
    let (mut eq_ratio, mut bc_ratio): (f64, f64) = (0.0, 0.0);
    for (i, res) in solved {
        let prob = &corpus[*i].problem;
        let Ok(sol) = res else {
            failures.push(*i);
            continue;
        };
        let report = residual_check(prob, sol, CHECK_POINTS, ResidualTolerances::uniform(RESIDUAL_TOL));
        let eq = report.equation_residual_max / report.equation_threshold;
        let bc = report.boundary_residual / report.boundary_threshold;
        eq_ratio = eq_ratio.max(eq);
        bc_ratio = bc_ratio.max(bc);
        if !(eq <= 1.0 && bc <= 1.0) {
            failures.push(*i);
        }
    }
    let elapsed = solve_time + start.elapsed();
    check(
        failures.is_empty() && elapsed < SOLVE_BUDGET,
        format!(
            "{} problems ({} with E = 0 skipped), {} failures {:?}, worst residual/threshold equation {eq_ratio:.1e} boundary {bc_ratio:.1e} (tol {RESIDUAL_TOL:e}, {CHECK_POINTS} points), {:.2} s (limit {} s)",
            solved.len(),
            corpus.len() - solved.len(),
            failures.len(),
            &failures[..failures.len().min(5)],
            elapsed.as_secs_f64(),
            SOLVE_BUDGET.as_secs()
        ),
    )
}

fn ode_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for i in 0..ODE_PROBLEMS {
        let n = rng.random_range(1..=8);
        let sb = random_bvp(&mut rng, PencilShape { n1: n, n2: 0, nu: 1 }, MAX_CONDITION);
        let sol = solve_bvp(&sb.problem, &SolverOptions::default()).map_err(|e| format!("problem {i}: {e}"))?;
        let oracle = match ode_shooting_oracle(&sb.problem) {
            Ok(OracleOutcome::Solution(o)) => o,
            other => return Err(format!("problem {i}: oracle returned {other:?}")),
        };
        for t in chebyshev_grid(sb.problem.horizon(), 65) {
            worst = worst.max((sol.x(t) - oracle.x(t)).amax());
        }
    }
    check(
        worst <= ORACLE_TOL,
        format!("{ODE_PROBLEMS} problems, worst absolute deviation {worst:.1e} on 65 points (tol {ORACLE_TOL:e})"),
    )
}

fn singular_shooting() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut wrong = Vec::new();
    for i in 0..SINGULAR_PROBLEMS {
        let mut shape = PencilShape::random(&mut rng, 8, 3);
        shape.n1 = shape.n1.max(1);
        // Alternate a rank drop of one with full cancellation of D̃.
        let deficiency = if i % 2 == 0 { 1 } else { shape.n1 };
        let sb = singular_shooting_bvp(&mut rng, shape, deficiency, MAX_CONDITION).map_err(|e| format!("problem {i}: {e}"))?;
        match solve_bvp(&sb.problem, &SolverOptions::default()) {
            Err(Error::SingularShootingMatrix { .. }) => {}
            Ok(_) => wrong.push(format!("{i}: solved")),
            Err(e) => wrong.push(format!("{i}: {e}")),
        }
    }
    check(
        wrong.is_empty(),
        format!("{SINGULAR_PROBLEMS} problems (rank drop 1 or D̃ = 0), {} not rejected {:?}", wrong.len(), wrong),
    )
}

fn nilpotent_chain() -> Verdict {
    let pencil = Pencil::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]), DMatrix::identity(2, 2))
        .map_err(|e| e.to_string())?;
    let f = ExpPolySignal::polynomial(vec![DVector::from_vec(vec![0.0, 1.0]), DVector::from_vec(vec![1.0, 0.0])])
        .map_err(|e| e.to_string())?;
    let mu2 = DVector::from_vec(vec![0.0, -1.0]);
    let u2 = |t: f64| DVector::from_vec(vec![-t, 0.0]);
    let times = [0.0, 0.25, 0.5, 1.0, 2.0];

    let identity = DMatrix::identity(2, 2);
    let canonical = QwfDecomposition::from_parts(&pencil, identity.clone(), identity, DMatrix::zeros(0, 0), pencil.e().clone())
        .map_err(|e| e.to_string())?;
    let part = solve_nilpotent_part(&canonical, &f);
    let mut worst = (&part.mu2 - &mu2).amax();
    for t in times {
        worst = worst.max((part.u2.evaluate(t) - u2(t)).amax());
    }

    // The same chain through the full solver with its own decomposition.
    let zero = DMatrix::zeros(2, 2);
    let prob = BvpProblem::new(pencil, zero.clone(), zero, DVector::zeros(2), 2.0, f).map_err(|e| e.to_string())?;
    let sol = solve_bvp(&prob, &SolverOptions::default()).map_err(|e| e.to_string())?;
    worst = worst.max((sol.mu() - &mu2).amax());
    for t in times {
        let u = sol.u(t).map_err(|e| e.to_string())?;
        worst = worst.max((u - u2(t)).amax());
    }
    check(worst <= CHAIN_TOL, format!("mu2 = (0, -1), u2(t) = (-t, 0), worst deviation {worst:.1e} (tol {CHAIN_TOL:e})"))
}

fn initial_values() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut worst_eq, mut worst_ic): (f64, f64) = (0.0, 0.0);
    let mut accepted_bad = Vec::new();
    let mut checked = 0;
    while checked < IVP_PROBLEMS {
        let shape = PencilShape::random(&mut rng, 6, 3);
        if shape.n2 == 0 || shape.n1 == 0 && shape.nu == 1 {
            continue;
        }
        let sp = random_pencil(&mut rng, shape, MAX_CONDITION);
        let forcing = random_forcing(&mut rng, shape.n());
        let y0 = DVector::from_fn(shape.n1, |_, _| rng.random_range(-1.0..1.0));
        let x0 = initial_value(&sp, &forcing, &y0, &DVector::zeros(shape.n2));
        let horizon = 1.0;
        let sol = solve_ivp(&sp.pencil, &x0, horizon, &forcing, &SolverOptions::default())
            .map_err(|e| format!("problem {checked}: {e}"))?;
        let n = shape.n();
        let prob = BvpProblem::new(sp.pencil.clone(), DMatrix::identity(n, n), DMatrix::zeros(n, n), x0.clone(), horizon, forcing.clone())
            .map_err(|e| e.to_string())?;
        let report = residual_check(&prob, &sol, CHECK_POINTS, ResidualTolerances::uniform(IVP_TOL));
        worst_eq = worst_eq.max(report.equation_residual_max / report.equation_threshold);
        worst_ic = worst_ic.max(report.boundary_residual / report.boundary_threshold);

        let mut shift = DVector::zeros(shape.n2);
        shift[rng.random_range(0..shape.n2)] = IVP_PERTURBATION;
        let bad = initial_value(&sp, &forcing, &y0, &shift);
        match solve_ivp(&sp.pencil, &bad, horizon, &forcing, &SolverOptions::default()) {
            Err(Error::InconsistentInitialValue { .. }) => {}
            other => accepted_bad.push(format!("{checked}: {:?}", other.map(|_| "solved"))),
        }
        checked += 1;
    }
    check(
        worst_eq <= 1.0 && worst_ic <= 1.0 && accepted_bad.is_empty(),
        format!(
            "{IVP_PROBLEMS} problems with a nilpotent part, worst residual/threshold equation {worst_eq:.1e} initial value {worst_ic:.1e} (tol {IVP_TOL:e}), {} perturbed values ({IVP_PERTURBATION:e}) not rejected {:?}",
            accepted_bad.len(),
            accepted_bad
        ),
    )
}

fn zero_e() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut wrong = Vec::new();
    for i in 0..20 {
        let n = rng.random_range(1..=6);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)) + DMatrix::identity(n, n) * n as f64;
        let pencil = Pencil::new(DMatrix::zeros(n, n), a).map_err(|e| e.to_string())?;
        let forcing = random_forcing(&mut rng, n);
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let prob = BvpProblem::new(pencil.clone(), b, DMatrix::zeros(n, n), DVector::zeros(n), 1.0, forcing.clone())
            .map_err(|e| e.to_string())?;
        if !matches!(solve_bvp(&prob, &SolverOptions::default()), Err(Error::ZeroEMatrix)) {
            wrong.push(format!("bvp {i}"));
        }
        if !matches!(solve_ivp(&pencil, &DVector::zeros(n), 1.0, &forcing, &SolverOptions::default()), Err(Error::ZeroEMatrix)) {
            wrong.push(format!("ivp {i}"));
        }
    }

    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join("zero_e.json");
    let mut codes = Vec::new();
    for cmd in ["solve", "verify"] {
        let out = Command::new(env!("CARGO_BIN_EXE_daebvp"))
            .args([cmd, file.to_str().ok_or("non-UTF-8 path")?])
            .output()
            .map_err(|e| e.to_string())?;
        let code = out.status.code();
        let stderr = String::from_utf8_lossy(&out.stderr);
        let stdout = String::from_utf8_lossy(&out.stdout);
        if code != Some(4) || !stderr.contains("E is the zero matrix") || stdout.contains("t,x_1") || stdout.contains("\"solved\"") {
            wrong.push(format!("cli {cmd}: exit {code:?}"));
        }
        codes.push(format!("{cmd} -> {code:?}"));
    }
    check(
        wrong.is_empty(),
        format!("20 core problems give ZeroEMatrix for bvp and ivp, CLI exit codes {codes:?}, failures {wrong:?}"),
    )
}

fn round_trip(corpus: &[SyntheticBvp], solved: &[(usize, Result<SolutionBundle>)]) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (i, res) in solved {
        let Ok(sol) = res else { return Err(format!("problem {i} did not solve")) };
        let x0 = sol.x(0.0);
        let mu = sol.mu();
        worst = worst.max((&mu - &x0).amax() / (1.0 + x0.amax()));
        for t in chebyshev_grid(corpus[*i].problem.horizon(), CHECK_POINTS) {
            let x = sol.x(t);
            let u = sol.u(t).map_err(|e| format!("problem {i}: {e}"))?;
            let scale = 1.0 + x.amax();
            worst = worst.max((&u - (&x - &x0)).amax() / scale);
            worst = worst.max((&mu + &u - &x).amax() / scale);
        }
        count += 1;
    }
    check(
        worst <= ROUND_TRIP_TOL,
        format!("{count} solutions at {CHECK_POINTS} points, worst relative deviation {worst:.1e} (tol {ROUND_TRIP_TOL:e})"),
    )
}

fn regularity_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (mut regular, mut singular) = (0, 0);
    let mut disagreements = Vec::new();
    for i in 0..INTEGER_PENCILS {
        let n = rng.random_range(1..=5);
        let (e, a) = random_integer_pencil(&mut rng, n, 3);
        let exact = symbolic_determinant(&e, &a).map_err(|err| format!("pencil {i}: {err}"))?;
        let to_matrix = |rows: &[Vec<i64>]| DMatrix::from_fn(n, n, |r, c| rows[r][c] as f64);
        let pencil = Pencil::new(to_matrix(&e), to_matrix(&a)).map_err(|err| err.to_string())?;
        let cert = check_regularity(&pencil, RankTolerance::Default);
        if cert.regular != !exact.is_zero() {
            disagreements.push(i);
        }
        if exact.is_zero() {
            singular += 1;
        } else {
            regular += 1;
        }
    }
    check(
        disagreements.is_empty(),
        format!("{INTEGER_PENCILS} integer pencils ({regular} regular, {singular} singular), {} disagreements {disagreements:?}", disagreements.len()),
    )
}

fn run(number: usize, name: &str, criterion: impl FnOnce() -> Verdict) -> bool {
    let verdict = catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let (tag, detail) = match &verdict {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag} {number:>2} {name}: {detail}");
    verdict.is_ok()
}

fn main() {
    let corpus = corpus();
    let (solved, solve_time) = solve_corpus(&corpus);
    let results = [
        run(1, "decomposition", || decomposition_correctness(&corpus)),
        run(2, "shooting identity", || shooting_identity(&corpus)),
        run(3, "end-to-end residuals", || end_to_end(&corpus, &solved, solve_time)),
        run(4, "ODE oracle", ode_oracle),
        run(5, "singular shooting matrix", singular_shooting),
        run(6, "nilpotent chain", nilpotent_chain),
        run(7, "initial value problems", initial_values),
        run(8, "E = 0", zero_e),
        run(9, "parameterization round trip", || round_trip(&corpus, &solved)),
        run(10, "regularity oracle", regularity_oracle),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
