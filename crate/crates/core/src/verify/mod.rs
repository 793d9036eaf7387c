//! Independent checks of solutions. Nothing here looks at `P`, `Q`, `J` or
//! `N`: candidates are judged only against `(E, A, B, C, d, T, f)`.

mod oracle;
mod quadrature;
mod residual;
mod symbolic;

pub use oracle::{ode_shooting_oracle, OracleOutcome, ShootingOracle};
pub use quadrature::{convolution_by_quadrature, gauss_kronrod, Quadrature};
pub use residual::{residual_check, ResidualReport, ResidualTolerances};
pub use symbolic::{symbolic_determinant, IntPoly, MAX_SYMBOLIC_DIM};
