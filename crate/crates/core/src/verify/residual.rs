use nalgebra::DVector;
use serde::Serialize;

use crate::bvp::BvpProblem;
use crate::linalg::chebyshev_grid;
use crate::trajectory::Trajectory;

/// Relative tolerances of [`residual_check`].
///
/// The equation residual is compared against `equation · (1 + ‖f‖_∞)`, the
/// boundary residual against `boundary · (1 + ‖d‖)` and the finite
/// difference mismatch against `derivative · (1 + max ‖ẋ‖)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualTolerances {
    pub equation: f64,
    pub boundary: f64,
    pub derivative: f64,
}

impl Default for ResidualTolerances {
    fn default() -> Self {
        Self { equation: 1e-8, boundary: 1e-8, derivative: 1e-6 }
    }
}

impl ResidualTolerances {
    pub fn uniform(tol: f64) -> Self {
        Self { equation: tol, boundary: tol, derivative: tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub passed: bool,
    /// max over the grid of `‖E ẋ(t) - A x(t) - f(t)‖`
    pub equation_residual_max: f64,
    /// `‖B x(0) + C x(T) - d‖`
    pub boundary_residual: f64,
    /// max over the grid of `‖ẋ(t) - central difference of x‖`
    pub derivative_check_max: f64,
    pub equation_threshold: f64,
    pub boundary_threshold: f64,
    pub derivative_threshold: f64,
    pub tolerances: ResidualTolerances,
    pub grid: Vec<f64>,
    /// `‖E ẋ(t) - A x(t) - f(t)‖` at each grid point.
    pub equation_residuals: Vec<f64>,
}

/// Checks a candidate solution on `grid_size` Chebyshev points of `[0, T]`.
///
/// Failures are reported through `passed`, never as errors.
pub fn residual_check<S: Trajectory + ?Sized>(
    prob: &BvpProblem,
    sol: &S,
    grid_size: usize,
    tols: ResidualTolerances,
) -> ResidualReport {
    assert!(grid_size >= 2, "residual grid needs at least two points");
    let e = prob.pencil().e();
    let a = prob.pencil().a();
    let grid = chebyshev_grid(prob.horizon(), grid_size);

    let mut equation_residuals = Vec::with_capacity(grid.len());
    let mut forcing_max: f64 = 0.0;
    let mut xdot_max: f64 = 0.0;
    let mut derivative_check_max: f64 = 0.0;
    for &t in &grid {
        let x = sol.state(t);
        let xdot = sol.derivative(t);
        let f = prob.forcing().evaluate(t);
        forcing_max = forcing_max.max(f.amax());
        xdot_max = xdot_max.max(xdot.norm());
        equation_residuals.push((e * &xdot - a * &x - f).norm());

        let h = 1e-5 * t.abs().max(1.0);
        let fd: DVector<f64> = (sol.state(t + h) - sol.state(t - h)) / (2.0 * h);
        derivative_check_max = derivative_check_max.max((fd - xdot).norm());
    }
    let equation_residual_max = equation_residuals.iter().copied().fold(0.0, f64::max);
    let boundary_residual = (prob.b() * sol.state(0.0) + prob.c() * sol.state(prob.horizon()) - prob.d()).norm();

    let equation_threshold = tols.equation * (1.0 + forcing_max);
    let boundary_threshold = tols.boundary * (1.0 + prob.d().norm());
    let derivative_threshold = tols.derivative * (1.0 + xdot_max);
    // NaN residuals must fail.
    let passed = equation_residual_max <= equation_threshold
        && boundary_residual <= boundary_threshold
        && derivative_check_max <= derivative_threshold;

    ResidualReport {
        passed,
        equation_residual_max,
        boundary_residual,
        derivative_check_max,
        equation_threshold,
        boundary_threshold,
        derivative_threshold,
        tolerances: tols,
        grid,
        equation_residuals,
    }
}
