//! The parameterization method for
//!
//! ```text
//! E x'(t) = A x(t) + f(t),   B x(0) + C x(T) = d.
//! ```
//!
//! With `μ` the left-endpoint parameter and `u = x - μ`, the quasi-Weierstrass
//! transformation splits the problem into a differential part
//! `ũ₁' = J(ũ₁ + μ̃₁) + f̃₁`, `ũ₁(0) = 0` and a nilpotent part
//! `N ũ₂' = ũ₂ + μ̃₂ + f̃₂`. The nilpotent part has a unique solution that
//! fixes `μ̃₂`; the boundary condition then reduces to the linear system
//! `D̃ μ̃₁ = d̃` and the solution is `x(t) = Q(μ̃ + ũ(t))`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expm::matrix_exponential;
use crate::forcing::{convolve_with_exp, exp_action_integral, ExpPolySignal};
use crate::linalg::{self, concat, frobenius, singular_values, spectral_norm};
use crate::pencil::{check_regularity, quasi_weierstrass_at, DecompositionDiagnostics, Pencil, QwfDecomposition, RankTolerance};
use crate::trajectory::Trajectory;

/// Default relative tolerance on the bottom rows of `[BQ  CQ  d]`, scaled by
/// `‖B‖_F + ‖C‖_F`.
pub const DEFAULT_STRUCTURE_TOL: f64 = 1e-10;

/// Default relative tolerance on `‖x(0) - d‖` for initial value problems,
/// scaled by `1 + ‖d‖`.
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-9;

/// Default threshold on the condition estimate of the shooting matrix:
/// `1 / (1e3 · n · ε)`.
pub fn default_max_condition(n: usize) -> f64 {
    1.0 / (1e3 * n.max(1) as f64 * f64::EPSILON)
}

/// The boundary value problem `(E, A, B, C, d, T, f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BvpProblem {
    pencil: Pencil,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DVector<f64>,
    horizon: f64,
    forcing: ExpPolySignal,
}

impl BvpProblem {
    pub fn new(
        pencil: Pencil,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DVector<f64>,
        horizon: f64,
        forcing: ExpPolySignal,
    ) -> Result<Self> {
        let n = pencil.dim();
        for (name, m) in [("B", &b), ("C", &c)] {
            if m.shape() != (n, n) {
                return Err(Error::dims(name, format!("{n}x{n}"), format!("{}x{}", m.nrows(), m.ncols())));
            }
            if !linalg::is_finite(m) {
                return Err(Error::NonFinite(name));
            }
        }
        if d.len() != n {
            return Err(Error::dims("d", n, d.len()));
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("d"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidHorizon(horizon));
        }
        if forcing.dim() != n {
            return Err(Error::dims("f", n, forcing.dim()));
        }
        Ok(Self { pencil, b, c, d, horizon, forcing })
    }

    pub fn pencil(&self) -> &Pencil {
        &self.pencil
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn forcing(&self) -> &ExpPolySignal {
        &self.forcing
    }
    pub fn dim(&self) -> usize {
        self.pencil.dim()
    }
}

/// Tolerances and overrides for [`solve_bvp`] and [`solve_ivp`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rank_tol: RankTolerance,
    /// Shift `λ*` used for the decomposition instead of the best probe.
    pub lambda: Option<f64>,
    pub structure_tol: f64,
    /// Shooting matrices with a larger condition estimate are singular;
    /// `None` selects [`default_max_condition`].
    pub max_condition: Option<f64>,
    pub consistency_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rank_tol: RankTolerance::Default,
            lambda: None,
            structure_tol: DEFAULT_STRUCTURE_TOL,
            max_condition: None,
            consistency_tol: DEFAULT_CONSISTENCY_TOL,
        }
    }
}

/// `B̃ = BQ`, `C̃ = CQ` and `d` split along the `n₁ | n₂` partition.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedBoundary {
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub d1: DVector<f64>,
    /// Frobenius norm of the bottom `n₂` rows of `[B̃  C̃  d]`.
    pub bottom_residual: f64,
    pub tolerance: f64,
}

/// Transforms the boundary operator and checks that its last `n₂` rows
/// vanish, i.e. that exactly `n₁` conditions are imposed.
pub fn transform_boundary(prob: &BvpProblem, decomp: &QwfDecomposition, structure_tol: f64) -> Result<TransformedBoundary> {
    let (n1, n2) = (decomp.n1(), decomp.n2());
    let bt = prob.b() * decomp.q();
    let ct = prob.c() * decomp.q();
    let bottom_sq = bt.rows(n1, n2).norm_squared() + ct.rows(n1, n2).norm_squared() + prob.d().rows(n1, n2).norm_squared();
    let bottom_residual = bottom_sq.sqrt();
    let tolerance = structure_tol * (frobenius(prob.b()) + frobenius(prob.c()));
    if bottom_residual > tolerance {
        return Err(Error::IncompatibleBoundaryStructure { residual: bottom_residual, tolerance });
    }
    Ok(TransformedBoundary {
        b1: bt.view((0, 0), (n1, n1)).into_owned(),
        b2: bt.view((0, n1), (n1, n2)).into_owned(),
        c1: ct.view((0, 0), (n1, n1)).into_owned(),
        c2: ct.view((0, n1), (n1, n2)).into_owned(),
        d1: prob.d().rows(0, n1).into_owned(),
        bottom_residual,
        tolerance,
    })
}

/// `Σ_{i=0}^{ν-1} Nⁱ f₂⁽ⁱ⁾` as a signal.
pub fn chain_sum(decomp: &QwfDecomposition, f2: &ExpPolySignal) -> ExpPolySignal {
    let n2 = decomp.n2();
    assert_eq!(f2.dim(), n2, "f2 must have dimension n2");
    let mut sum = ExpPolySignal::zero(n2);
    let mut n_power = DMatrix::identity(n2, n2);
    let mut derivative = f2.clone();
    for i in 0..decomp.nu() {
        if i > 0 {
            n_power = &n_power * decomp.n();
            derivative = derivative.differentiate();
        }
        let term = derivative.left_multiply(&n_power).expect("square N power");
        sum = sum.add(&term).expect("same dimension");
    }
    sum
}

/// Solution of `N ũ₂' = ũ₂ + μ̃₂ + f̃₂` with `ũ₂(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NilpotentPart {
    /// `μ̃₂ = -Σ Nⁱ f̃₂⁽ⁱ⁾(0)`
    pub mu2: DVector<f64>,
    /// `ũ₂(t) = -Σ Nⁱ [f̃₂⁽ⁱ⁾(t) - f̃₂⁽ⁱ⁾(0)]`
    pub u2: ExpPolySignal,
    pub u2dot: ExpPolySignal,
}

pub fn solve_nilpotent_part(decomp: &QwfDecomposition, f2: &ExpPolySignal) -> NilpotentPart {
    let chain = chain_sum(decomp, f2);
    let at_zero = chain.evaluate(0.0);
    let u2 = chain
        .scale(-1.0)
        .add(&ExpPolySignal::constant(at_zero.clone()))
        .expect("same dimension");
    let u2dot = u2.differentiate();
    NilpotentPart { mu2: -at_zero, u2, u2dot }
}

/// `D̃ μ̃₁ = d̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingSystem {
    pub d: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// `(‖B̃₁‖₂ + ‖C̃₁‖₂(1 + ‖e^{TJ} - I‖₂)) / σ_min(D̃)`: singularity of `D̃`
    /// relative to the size of the terms it is summed from; 1 when `n₁ = 0`.
    pub cond_estimate: f64,
}

/// Assembles `D̃ = B̃₁ + C̃₁ + C̃₁(e^{TJ} - I)` and
/// `d̃ = d₁ - C̃₁ ∫₀ᵀ e^{(T-s)J} f̃₁ ds + B̃₂ Σ Nⁱ f̃₂⁽ⁱ⁾(0) + C̃₂ Σ Nⁱ f̃₂⁽ⁱ⁾(T)`.
pub fn build_shooting_system(
    tb: &TransformedBoundary,
    decomp: &QwfDecomposition,
    f1: &ExpPolySignal,
    f2: &ExpPolySignal,
    horizon: f64,
) -> Result<ShootingSystem> {
    let j = decomp.j();
    let growth = exp_action_integral(j, horizon)?;
    let d = &tb.b1 + &tb.c1 + &tb.c1 * &growth;

    let chain = chain_sum(decomp, f2);
    let rhs = &tb.d1 - &tb.c1 * convolve_with_exp(j, f1, horizon)? + &tb.b2 * chain.evaluate(0.0) + &tb.c2 * chain.evaluate(horizon);

    let cond_estimate = if decomp.n1() == 0 {
        1.0
    } else {
        let scale = spectral_norm(&tb.b1) + spectral_norm(&tb.c1) * (1.0 + spectral_norm(&growth));
        let sigma_min = singular_values(&d).last().copied().unwrap_or(0.0);
        if sigma_min > 0.0 {
            scale.max(spectral_norm(&d)) / sigma_min
        } else {
            f64::INFINITY
        }
    };
    Ok(ShootingSystem { d, rhs, cond_estimate })
}

/// Solves the shooting system, or reports that `D̃` is singular.
pub fn solve_shooting(sys: &ShootingSystem, max_condition: f64) -> Result<DVector<f64>> {
    let n1 = sys.rhs.len();
    if n1 == 0 {
        return Ok(DVector::zeros(0));
    }
    let singular = Error::SingularShootingMatrix { cond: sys.cond_estimate, threshold: max_condition };
    if !(sys.cond_estimate <= max_condition) {
        return Err(singular);
    }
    let mut mu1 = sys.d.clone().lu().solve(&sys.rhs).ok_or(singular.clone())?;
    // One step of iterative refinement.
    let residual = &sys.rhs - &sys.d * &mu1;
    if let Some(correction) = sys.d.clone().lu().solve(&residual) {
        mu1 += correction;
    }
    Ok(mu1)
}

/// `ũ₁(t) = (e^{tJ} - I) μ̃₁ + ∫₀ᵗ e^{(t-s)J} f̃₁(s) ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialPart {
    j: DMatrix<f64>,
    mu1: DVector<f64>,
    f1: ExpPolySignal,
}

impl DifferentialPart {
    pub fn u1(&self, t: f64) -> Result<DVector<f64>> {
        Ok(exp_action_integral(&self.j, t)? * &self.mu1 + convolve_with_exp(&self.j, &self.f1, t)?)
    }

    /// `(ũ₁(t), ũ₁'(t))` with the derivative taken from the equation itself.
    pub fn u1_and_derivative(&self, t: f64) -> Result<(DVector<f64>, DVector<f64>)> {
        let u1 = self.u1(t)?;
        let u1dot = &self.j * (&u1 + &self.mu1) + self.f1.evaluate(t);
        Ok((u1, u1dot))
    }
}

pub fn solve_differential_part(decomp: &QwfDecomposition, mu1: &DVector<f64>, f1: &ExpPolySignal) -> DifferentialPart {
    assert_eq!(mu1.len(), decomp.n1(), "mu1 must have dimension n1");
    assert_eq!(f1.dim(), decomp.n1(), "f1 must have dimension n1");
    DifferentialPart { j: decomp.j().clone(), mu1: mu1.clone(), f1: f1.clone() }
}

/// Every tolerance decision taken while solving.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SolveDiagnostics {
    pub n1: usize,
    pub n2: usize,
    pub nu: usize,
    pub lambda_star: f64,
    pub cond_shooting: f64,
    pub max_condition: f64,
    pub bottom_residual: f64,
    pub structure_tolerance: f64,
    /// `‖x(0) - d‖` for initial value problems.
    pub consistency_residual: Option<f64>,
    pub consistency_tolerance: Option<f64>,
    pub decomposition: DecompositionDiagnostics,
}

/// Closed-form solution `x(t) = Q(μ̃ + ũ(t))` together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionBundle {
    decomp: QwfDecomposition,
    mu1: DVector<f64>,
    mu2: DVector<f64>,
    differential: DifferentialPart,
    nilpotent: NilpotentPart,
    horizon: f64,
    diagnostics: SolveDiagnostics,
}

/// One evaluation of a [`SolutionBundle`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: DVector<f64>,
    pub xdot: DVector<f64>,
    /// `t` lies outside `[0, T]`.
    pub extrapolated: bool,
}

impl SolutionBundle {
    pub fn mu1(&self) -> &DVector<f64> {
        &self.mu1
    }
    pub fn mu2(&self) -> &DVector<f64> {
        &self.mu2
    }
    /// `μ̃ = (μ̃₁, μ̃₂)`
    pub fn mu_tilde(&self) -> DVector<f64> {
        concat(&self.mu1, &self.mu2)
    }
    /// The parameter `μ = Q μ̃`; it satisfies `E μ = E x(0)`.
    pub fn mu(&self) -> DVector<f64> {
        self.decomp.q() * self.mu_tilde()
    }
    pub fn decomposition(&self) -> &QwfDecomposition {
        &self.decomp
    }
    pub fn diagnostics(&self) -> &SolveDiagnostics {
        &self.diagnostics
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn differential_part(&self) -> &DifferentialPart {
        &self.differential
    }
    pub fn nilpotent_part(&self) -> &NilpotentPart {
        &self.nilpotent
    }

    /// `(ũ(t), ũ'(t))` in decomposition coordinates.
    pub fn u_tilde(&self, t: f64) -> Result<(DVector<f64>, DVector<f64>)> {
        let (u1, u1dot) = self.differential.u1_and_derivative(t)?;
        let u2 = self.nilpotent.u2.evaluate(t);
        let u2dot = self.nilpotent.u2dot.evaluate(t);
        Ok((concat(&u1, &u2), concat(&u1dot, &u2dot)))
    }

    /// `u(t) = Q ũ(t) = x(t) - μ`.
    pub fn u(&self, t: f64) -> Result<DVector<f64>> {
        Ok(self.decomp.q() * self.u_tilde(t)?.0)
    }

    pub fn try_sample(&self, t: f64) -> Result<Sample> {
        let (u, udot) = self.u_tilde(t)?;
        let q = self.decomp.q();
        Ok(Sample {
            t,
            x: q * (self.mu_tilde() + u),
            xdot: q * udot,
            extrapolated: !(0.0..=self.horizon).contains(&t),
        })
    }

    /// Evaluates at `t`. Within `[0, T]` this cannot fail once the solve
    /// succeeded; far outside it may panic on exponential overflow.
    pub fn sample(&self, t: f64) -> Sample {
        self.try_sample(t).expect("solution evaluation overflowed")
    }

    pub fn x(&self, t: f64) -> DVector<f64> {
        self.sample(t).x
    }

    pub fn xdot(&self, t: f64) -> DVector<f64> {
        self.sample(t).xdot
    }
}

impl Trajectory for SolutionBundle {
    fn dim(&self) -> usize {
        self.decomp.dim()
    }

    fn state(&self, t: f64) -> DVector<f64> {
        self.x(t)
    }

    fn derivative(&self, t: f64) -> DVector<f64> {
        self.xdot(t)
    }
}

struct Prepared {
    decomp: QwfDecomposition,
    f1: ExpPolySignal,
    f2: ExpPolySignal,
    nilpotent: NilpotentPart,
}

fn prepare(pencil: &Pencil, forcing: &ExpPolySignal, opts: &SolverOptions) -> Result<Prepared> {
    if pencil.is_e_zero() {
        return Err(Error::ZeroEMatrix);
    }
    let cert = check_regularity(pencil, opts.rank_tol);
    if !cert.regular {
        return Err(Error::NotRegular);
    }
    let lambda = opts.lambda.or(cert.chosen_lambda).expect("regular certificate has a shift");
    let decomp = quasi_weierstrass_at(pencil, lambda, opts.rank_tol)?;
    let transformed = forcing.left_multiply(decomp.p())?;
    let f1 = transformed.rows(0, decomp.n1());
    let f2 = transformed.rows(decomp.n1(), decomp.n2());
    let nilpotent = solve_nilpotent_part(&decomp, &f2);
    Ok(Prepared { decomp, f1, f2, nilpotent })
}

/// Solves the boundary value problem, or explains why it has no unique
/// solution.
pub fn solve_bvp(prob: &BvpProblem, opts: &SolverOptions) -> Result<SolutionBundle> {
    let Prepared { decomp, f1, f2, nilpotent } = prepare(prob.pencil(), prob.forcing(), opts)?;
    let tb = transform_boundary(prob, &decomp, opts.structure_tol)?;
    let sys = build_shooting_system(&tb, &decomp, &f1, &f2, prob.horizon())?;
    let max_condition = opts.max_condition.unwrap_or_else(|| default_max_condition(prob.dim()));
    let mu1 = solve_shooting(&sys, max_condition)?;
    let differential = solve_differential_part(&decomp, &mu1, &f1);

    let diagnostics = SolveDiagnostics {
        n1: decomp.n1(),
        n2: decomp.n2(),
        nu: decomp.nu(),
        lambda_star: decomp.lambda_star(),
        cond_shooting: sys.cond_estimate,
        max_condition,
        bottom_residual: tb.bottom_residual,
        structure_tolerance: tb.tolerance,
        consistency_residual: None,
        consistency_tolerance: None,
        decomposition: decomp.diagnostics().clone(),
    };
    Ok(SolutionBundle {
        mu2: nilpotent.mu2.clone(),
        mu1,
        decomp,
        differential,
        nilpotent,
        horizon: prob.horizon(),
        diagnostics,
    })
}

/// Solves `E x' = A x + f`, `x(0) = d` on `[0, T]`.
///
/// The differential block of the parameter is read from `Q⁻¹ d`; the
/// nilpotent block is forced to `-Σ Nⁱ f̃₂⁽ⁱ⁾(0)`, and `d` is accepted only
/// if the resulting `x(0)` reproduces it.
pub fn solve_ivp(pencil: &Pencil, d: &DVector<f64>, horizon: f64, forcing: &ExpPolySignal, opts: &SolverOptions) -> Result<SolutionBundle> {
    let n = pencil.dim();
    if d.len() != n {
        return Err(Error::dims("d", n, d.len()));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("d"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidHorizon(horizon));
    }
    if forcing.dim() != n {
        return Err(Error::dims("f", n, forcing.dim()));
    }
    let Prepared { decomp, f1, nilpotent, .. } = prepare(pencil, forcing, opts)?;
    let mu_from_d = decomp.q_inv() * d;
    let mu1 = mu_from_d.rows(0, decomp.n1()).into_owned();
    let x0 = decomp.q() * concat(&mu1, &nilpotent.mu2);
    let residual = (&x0 - d).norm();
    let tolerance = opts.consistency_tol * (1.0 + d.norm());
    if !(residual <= tolerance) {
        return Err(Error::InconsistentInitialValue { residual, tolerance });
    }
    // Surface overflow now rather than on first evaluation.
    convolve_with_exp(decomp.j(), &f1, horizon)?;
    matrix_exponential(&(decomp.j() * horizon))?;

    let differential = solve_differential_part(&decomp, &mu1, &f1);
    let diagnostics = SolveDiagnostics {
        n1: decomp.n1(),
        n2: decomp.n2(),
        nu: decomp.nu(),
        lambda_star: decomp.lambda_star(),
        cond_shooting: 1.0,
        max_condition: opts.max_condition.unwrap_or_else(|| default_max_condition(n)),
        bottom_residual: 0.0,
        structure_tolerance: 0.0,
        consistency_residual: Some(residual),
        consistency_tolerance: Some(tolerance),
        decomposition: decomp.diagnostics().clone(),
    };
    Ok(SolutionBundle {
        mu2: nilpotent.mu2.clone(),
        mu1,
        decomp,
        differential,
        nilpotent,
        horizon,
        diagnostics,
    })
}
