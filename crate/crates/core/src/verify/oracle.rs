use nalgebra::{DMatrix, DVector};

use crate::bvp::BvpProblem;
use crate::error::{Error, Result};
use crate::expm::matrix_exponential;
use crate::forcing::{convolve_with_exp, ExpPolySignal};
use crate::linalg::{condition, inverse};
use crate::trajectory::Trajectory;

/// `E` counts as invertible below this condition number.
const MAX_E_CONDITION: f64 = 1e10;
const MAX_SHOOTING_CONDITION: f64 = 1e12;

/// Classical single-shooting solution of `x' = F x + g` with
/// `F = E⁻¹A`, `g = E⁻¹f`:
/// `x(t) = e^{tF} x₀ + ∫₀ᵗ e^{(t-s)F} g(s) ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingOracle {
    system: DMatrix<f64>,
    forcing: ExpPolySignal,
    x0: DVector<f64>,
}

impl ShootingOracle {
    pub fn initial_value(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn x(&self, t: f64) -> DVector<f64> {
        let fundamental = matrix_exponential(&(&self.system * t)).expect("oracle exponential within bound");
        let particular = convolve_with_exp(&self.system, &self.forcing, t).expect("oracle exponential within bound");
        fundamental * &self.x0 + particular
    }

    pub fn xdot(&self, t: f64) -> DVector<f64> {
        &self.system * self.x(t) + self.forcing.evaluate(t)
    }
}

impl Trajectory for ShootingOracle {
    fn dim(&self) -> usize {
        self.x0.len()
    }

    fn state(&self, t: f64) -> DVector<f64> {
        self.x(t)
    }

    fn derivative(&self, t: f64) -> DVector<f64> {
        self.xdot(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    Solution(ShootingOracle),
    /// `E` is singular (or too ill-conditioned to invert).
    NotApplicable,
}

/// Reference solution for problems with invertible `E`, built without any
/// pencil decomposition: `(B + C e^{TF}) x₀ = d - C ∫₀ᵀ e^{(T-s)F} g(s) ds`.
pub fn ode_shooting_oracle(prob: &BvpProblem) -> Result<OracleOutcome> {
    let e = prob.pencil().e();
    if condition(e) > MAX_E_CONDITION {
        return Ok(OracleOutcome::NotApplicable);
    }
    let Some(e_inv) = inverse(e) else {
        return Ok(OracleOutcome::NotApplicable);
    };
    let system = &e_inv * prob.pencil().a();
    let forcing = prob.forcing().left_multiply(&e_inv)?;
    let horizon = prob.horizon();

    let shooting = prob.b() + prob.c() * matrix_exponential(&(&system * horizon))?;
    let rhs = prob.d() - prob.c() * convolve_with_exp(&system, &forcing, horizon)?;
    let cond = condition(&shooting);
    if !(cond <= MAX_SHOOTING_CONDITION) {
        return Err(Error::OracleSingular { cond });
    }
    let x0 = shooting.lu().solve(&rhs).ok_or(Error::OracleSingular { cond })?;
    Ok(OracleOutcome::Solution(ShootingOracle { system, forcing, x0 }))
}
