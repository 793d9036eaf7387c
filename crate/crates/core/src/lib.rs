//! Two-point boundary value problems for linear differential-algebraic
//! equations with constant coefficients,
//!
//! ```text
//! E x'(t) = A x(t) + f(t),   t ∈ (0, T),
//! B x(0) + C x(T) = d,
//! ```
//!
//! solved in closed form by the parameterization method: the parameter is
//! the left-endpoint value of the solution, the pencil `(E, A)` is split by
//! a quasi-Weierstrass transformation, and unique solvability reduces to the
//! nonsingularity of a small shooting matrix `D̃`.
//!
//! ```
//! use daebvp_core::{solve_bvp, BvpProblem, ExpPolySignal, Pencil, SolverOptions};
//! use nalgebra::{dmatrix, dvector};
//!
//! // x' = 0, x(0) + x(1) = 1
//! let pencil = Pencil::new(dmatrix![1.0], dmatrix![0.0]).unwrap();
//! let prob = BvpProblem::new(pencil, dmatrix![1.0], dmatrix![1.0], dvector![1.0], 1.0, ExpPolySignal::zero(1)).unwrap();
//! let sol = solve_bvp(&prob, &SolverOptions::default()).unwrap();
//! assert!((sol.x(0.3)[0] - 0.5).abs() < 1e-15);
//! ```

pub mod bvp;
pub mod error;
pub mod expm;
pub mod forcing;
mod linalg;
pub mod pencil;
pub mod synth;
pub mod trajectory;
pub mod verify;

pub use bvp::{
    solve_bvp, solve_ivp, BvpProblem, NilpotentPart, Sample, ShootingSystem, SolutionBundle, SolveDiagnostics,
    SolverOptions, TransformedBoundary,
};
pub use error::{Error, Result};
pub use expm::matrix_exponential;
pub use forcing::{convolve_with_exp, exp_action_integral, ExpPolySignal, ExpPolyTerm, PhaseKind};
pub use linalg::chebyshev_grid;
pub use pencil::{
    check_regularity, pencil_index, quasi_weierstrass, quasi_weierstrass_at, Pencil, QwfDecomposition, RankTolerance,
    RegularityCertificate,
};
pub use trajectory::{Perturbed, Trajectory};
pub use verify::{residual_check, ResidualReport, ResidualTolerances};
