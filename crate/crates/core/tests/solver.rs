use daebvp_core::bvp::{build_shooting_system, solve_nilpotent_part, transform_boundary};
use daebvp_core::synth::{initial_value, random_bvp, random_pencil, singular_shooting_bvp, PencilShape, SyntheticBvp};
use daebvp_core::verify::{ode_shooting_oracle, OracleOutcome};
use daebvp_core::*;
use nalgebra::{DMatrix, DVector};
use std::ops::AddAssign;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus(seed: u64, count: usize) -> Vec<SyntheticBvp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let shape = PencilShape::random(&mut rng, 8, 3);
        let sb = random_bvp(&mut rng, shape, 1e4);
        if !sb.problem.pencil().is_e_zero() {
            out.push(sb);
        }
    }
    out
}

#[test]
fn corpus_solutions_pass_the_residual_check() {
    for (i, sb) in corpus(201, 150).iter().enumerate() {
        let sol = solve_bvp(&sb.problem, &SolverOptions::default()).unwrap_or_else(|e| panic!("problem {i}: {e}"));
        let report = residual_check(&sb.problem, &sol, 33, ResidualTolerances::default());
        assert!(report.passed, "problem {i}: {report:?}");
    }
}

#[test]
fn shooting_matrix_identity() {
    for sb in corpus(202, 100) {
        let p = sb.problem.pencil();
        let cert = check_regularity(p, RankTolerance::Default);
        let decomp = quasi_weierstrass(p, &cert, RankTolerance::Default).unwrap();
        let tb = transform_boundary(&sb.problem, &decomp, 1e-10).unwrap();
        let f = sb.problem.forcing().left_multiply(decomp.p()).unwrap();
        let f1 = f.rows(0, decomp.n1());
        let f2 = f.rows(decomp.n1(), decomp.n2());
        let sys = build_shooting_system(&tb, &decomp, &f1, &f2, sb.problem.horizon()).unwrap();
        let direct = &tb.b1 + &tb.c1 * matrix_exponential(&(decomp.j() * sb.problem.horizon())).unwrap();
        let rel = (&sys.d - &direct).norm() / direct.norm();
        assert!(rel <= 1e-12 || decomp.n1() == 0, "{rel:e}");
    }
}

#[test]
fn agrees_with_the_ode_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    for i in 0..60 {
        let n = rng.random_range(1..=8);
        let sb = random_bvp(&mut rng, PencilShape { n1: n, n2: 0, nu: 1 }, 1e4);
        let sol = solve_bvp(&sb.problem, &SolverOptions::default()).unwrap();
        let OracleOutcome::Solution(oracle) = ode_shooting_oracle(&sb.problem).unwrap() else {
            panic!("problem {i}: E should be invertible");
        };
        for t in chebyshev_grid(sb.problem.horizon(), 33) {
            let diff = (sol.x(t) - oracle.x(t)).amax();
            assert!(diff <= 1e-8, "problem {i}, t = {t}: {diff:e}");
        }
    }
}

#[test]
fn oracle_declines_singular_e() {
    let pencil = Pencil::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]), DMatrix::identity(2, 2)).unwrap();
    let prob = BvpProblem::new(pencil, DMatrix::zeros(2, 2), DMatrix::zeros(2, 2), DVector::zeros(2), 1.0, ExpPolySignal::zero(2)).unwrap();
    assert_eq!(ode_shooting_oracle(&prob).unwrap(), OracleOutcome::NotApplicable);
}

#[test]
fn constructed_singular_shooting_matrices_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    for i in 0..50 {
        let mut shape = PencilShape::random(&mut rng, 8, 3);
        if shape.n1 == 0 {
            shape.n1 = 1;
        }
        let deficiency = rng.random_range(1..=shape.n1);
        let sb = singular_shooting_bvp(&mut rng, shape, deficiency, 1e4).unwrap();
        match solve_bvp(&sb.problem, &SolverOptions::default()) {
            Err(Error::SingularShootingMatrix { .. }) => {}
            other => panic!("problem {i}: {other:?}"),
        }
    }
}

#[test]
fn fully_cancelled_shooting_matrix() {
    // C̃₁ = -B̃₁ e^{-TJ} makes D̃ vanish.
    let j = -0.4;
    let t = 1.5;
    let pencil = Pencil::new(DMatrix::identity(1, 1), DMatrix::from_element(1, 1, j)).unwrap();
    let b = DMatrix::from_element(1, 1, 2.0);
    let c = DMatrix::from_element(1, 1, -2.0 * (-j * t as f64).exp());
    let prob = BvpProblem::new(pencil, b, c, DVector::from_element(1, 1.0), t, ExpPolySignal::zero(1)).unwrap();
    assert!(matches!(solve_bvp(&prob, &SolverOptions::default()), Err(Error::SingularShootingMatrix { .. })));
}

#[test]
fn uniqueness_under_data_perturbation() {
    // Any other trajectory is rejected by the problem data.
    for (i, sb) in corpus(205, 40).iter().enumerate() {
        let sol = solve_bvp(&sb.problem, &SolverOptions::default()).unwrap();
        let bad = Perturbed::new(&sol, i % sb.problem.dim(), 1e-3);
        let report = residual_check(&sb.problem, &bad, 33, ResidualTolerances::default());
        assert!(!report.passed, "problem {i}");
    }
}

#[test]
fn parameterization_round_trip() {
    for (i, sb) in corpus(206, 60).iter().enumerate() {
        let sol = solve_bvp(&sb.problem, &SolverOptions::default()).unwrap();
        let x0 = sol.x(0.0);
        let mu = sol.mu();
        let scale = 1.0 + x0.amax();
        assert!((&mu - &x0).amax() <= 1e-12 * scale, "problem {i}");
        for t in chebyshev_grid(sb.problem.horizon(), 17) {
            let x = sol.x(t);
            let u = &x - &x0;
            let back = &mu + sol.u(t).unwrap();
            let scale = 1.0 + x.amax();
            assert!((&u - sol.u(t).unwrap()).amax() <= 1e-12 * scale, "problem {i}, t = {t}");
            assert!((back - &x).amax() <= 1e-12 * scale, "problem {i}, t = {t}");
        }
    }
}

#[test]
fn initial_value_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(207);
    let mut checked = 0;
    while checked < 40 {
        let shape = PencilShape::random(&mut rng, 6, 3);
        if shape.n2 == 0 || shape.n1 == 0 && shape.nu == 1 {
            continue;
        }
        let sp = random_pencil(&mut rng, shape, 1e4);
        let forcing = daebvp_core::synth::random_forcing(&mut rng, shape.n());
        let y0 = DVector::from_fn(shape.n1, |_, _| rng.random_range(-1.0..1.0));
        let d = initial_value(&sp, &forcing, &y0, &DVector::zeros(shape.n2));
        let horizon = 1.0;
        let sol = solve_ivp(&sp.pencil, &d, horizon, &forcing, &SolverOptions::default()).unwrap();
        assert!((sol.x(0.0) - &d).norm() <= 1e-9 * (1.0 + d.norm()));
        let identity = DMatrix::identity(shape.n(), shape.n());
        let prob = BvpProblem::new(sp.pencil.clone(), identity, DMatrix::zeros(shape.n(), shape.n()), d, horizon, forcing.clone()).unwrap();
        let report = residual_check(&prob, &sol, 33, ResidualTolerances::uniform(1e-9));
        assert!(report.equation_residual_max <= report.equation_threshold, "{report:?}");

        let mut shift = DVector::zeros(shape.n2);
        shift[rng.random_range(0..shape.n2)] = 1e-3;
        let bad = initial_value(&sp, &forcing, &y0, &shift);
        assert!(matches!(
            solve_ivp(&sp.pencil, &bad, horizon, &forcing, &SolverOptions::default()),
            Err(Error::InconsistentInitialValue { .. })
        ));
        checked += 1;
    }
}

#[test]
fn zero_e_is_rejected() {
    for n in 1..=4 {
        let pencil = Pencil::new(DMatrix::zeros(n, n), DMatrix::identity(n, n)).unwrap();
        let prob = BvpProblem::new(pencil.clone(), DMatrix::identity(n, n), DMatrix::zeros(n, n), DVector::zeros(n), 1.0, ExpPolySignal::zero(n)).unwrap();
        assert!(matches!(solve_bvp(&prob, &SolverOptions::default()), Err(Error::ZeroEMatrix)));
        assert!(matches!(solve_ivp(&pencil, &DVector::zeros(n), 1.0, &ExpPolySignal::zero(n), &SolverOptions::default()), Err(Error::ZeroEMatrix)));
    }
}

#[test]
fn hand_worked_index_two_chain() {
    // N = [[0,1],[0,0]] with f̃₂(t) = (t, 1).
    let pencil = Pencil::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]), DMatrix::identity(2, 2)).unwrap();
    let decomp = QwfDecomposition::from_parts(&pencil, DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::zeros(0, 0), pencil.e().clone()).unwrap();
    let f2 = ExpPolySignal::polynomial(vec![DVector::from_vec(vec![0.0, 1.0]), DVector::from_vec(vec![1.0, 0.0])]).unwrap();
    let part = solve_nilpotent_part(&decomp, &f2);
    assert!((&part.mu2 - DVector::from_vec(vec![0.0, -1.0])).amax() <= 1e-12);
    for t in [0.0, 0.25, 1.0, 3.0] {
        assert!((part.u2.evaluate(t) - DVector::from_vec(vec![-t, 0.0])).amax() <= 1e-12);
        assert!((part.u2dot.evaluate(t) - DVector::from_vec(vec![-1.0, 0.0])).amax() <= 1e-12);
    }
}

#[test]
fn not_regular_pencil() {
    let pencil = Pencil::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0])).unwrap();
    let prob = BvpProblem::new(pencil, DMatrix::identity(2, 2), DMatrix::zeros(2, 2), DVector::zeros(2), 1.0, ExpPolySignal::zero(2)).unwrap();
    assert!(matches!(solve_bvp(&prob, &SolverOptions::default()), Err(Error::NotRegular)));
}

fn solvable_corpus(seed: u64, count: usize, max_condition: f64) -> Vec<SyntheticBvp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let shape = PencilShape::random(&mut rng, 8, 3);
        let sb = random_bvp(&mut rng, shape, max_condition);
        if !sb.problem.pencil().is_e_zero() {
            out.push(sb);
        }
    }
    out
}

#[test]
fn default_tolerances_hold_up_to_condition_1e5() {
    for (i, sb) in solvable_corpus(208, 150, 1e5).iter().enumerate() {
        let sol = solve_bvp(&sb.problem, &SolverOptions::default()).unwrap_or_else(|e| panic!("problem {i}: {e}"));
        let report = residual_check(&sb.problem, &sol, 33, ResidualTolerances::default());
        assert!(report.passed, "problem {i}: {report:?}");
    }
}

#[test]
fn residual_is_small_against_the_terms_at_condition_1e6() {
    // The default threshold is not scaled by ‖A‖‖x‖ and is missed by a few
    // percent of these problems. The error stays within the rounding of the
    // terms amplified by cond(P)·cond(Q).
    for (i, sb) in solvable_corpus(209, 150, 1e6).iter().enumerate() {
        let prob = &sb.problem;
        let sol = solve_bvp(prob, &SolverOptions::default()).unwrap_or_else(|e| panic!("problem {i}: {e}"));
        let diag = &sol.diagnostics().decomposition;
        let bound = 1e3 * f64::EPSILON * (1.0 + diag.cond_p * diag.cond_q);
        let (e, a) = (prob.pencil().e(), prob.pencil().a());
        for t in chebyshev_grid(prob.horizon(), 33) {
            let (x, xdot) = (sol.x(t), sol.xdot(t));
            let residual = (e * &xdot - a * &x - prob.forcing().evaluate(t)).norm();
            let terms = e.norm() * xdot.norm() + a.norm() * x.norm() + prob.forcing().evaluate(t).norm();
            assert!(residual <= bound * terms, "problem {i}, t = {t}: {residual:e} vs {terms:e}");
        }
        let report = residual_check(prob, &sol, 33, ResidualTolerances::default());
        assert!(report.boundary_residual <= report.boundary_threshold, "problem {i}");
    }
}

#[test]
fn scaled_algebraic_forcing_flips_the_consistency_verdict() {
    // x1' = -x1 + f1, x3' = x2 + f2, 0 = x3 + f3 with f = (0, 0, 1).
    let pencil = Pencil::new(
        DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]),
        DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0])),
    )
    .unwrap();
    let d = DVector::from_vec(vec![1.0, 0.0, -1.0]);
    let opts = SolverOptions::default();
    let tol = opts.consistency_tol;
    for (factor, consistent) in [(0.0, true), (0.1, true), (11.0, false), (100.0, false), (1e4, false)] {
        let forcing = ExpPolySignal::constant(DVector::from_vec(vec![0.0, 0.0, 1.0 + factor * tol]));
        let result = solve_ivp(&pencil, &d, 1.0, &forcing, &opts);
        match (consistent, result) {
            (true, Ok(_)) | (false, Err(Error::InconsistentInitialValue { .. })) => {}
            (_, other) => panic!("ε = {factor}·tol: {other:?}"),
        }
    }
}

#[test]
fn parameter_responds_linearly_to_boundary_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(210);
    for (i, sb) in corpus(211, 60).iter().enumerate() {
        let prob = &sb.problem;
        let sol = solve_bvp(prob, &SolverOptions::default()).unwrap();
        let decomp = sol.decomposition();
        let n1 = decomp.n1();
        if n1 == 0 {
            continue;
        }
        let tb = transform_boundary(prob, decomp, 1e-10).unwrap();
        let f = prob.forcing().left_multiply(decomp.p()).unwrap();
        let sys = build_shooting_system(&tb, decomp, &f.rows(0, n1), &f.rows(n1, decomp.n2()), prob.horizon()).unwrap();
        let mut d = prob.d().clone();
        let delta = DVector::from_fn(n1, |_, _| rng.random_range(-1.0..1.0));
        d.rows_mut(0, n1).add_assign(&delta);
        let moved = BvpProblem::new(prob.pencil().clone(), prob.b().clone(), prob.c().clone(), d, prob.horizon(), prob.forcing().clone()).unwrap();
        let sol2 = solve_bvp(&moved, &SolverOptions::default()).unwrap();
        let expected = sys.d.clone().lu().solve(&delta).unwrap();
        let change = sol2.mu1() - sol.mu1();
        let scale = 1.0 + sol.mu1().amax() + sol2.mu1().amax();
        assert!((&change - &expected).amax() <= 1e-10 * scale, "problem {i}: {:e}", (&change - &expected).amax());
    }
}
