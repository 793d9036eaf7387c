use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the solver pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("time horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),

    #[error("the pencil (E, A) is not regular: det(sE - A) vanishes identically")]
    NotRegular,

    #[error("E is the zero matrix: the equation is purely algebraic and the parameter defined through E*mu = E*x(0) carries no information")]
    ZeroEMatrix,

    #[error("lambda*E - A is numerically singular at lambda = {lambda} (smallest singular value {sigma_min:e}, tolerance {tolerance:e})")]
    SingularTransform {
        lambda: f64,
        sigma_min: f64,
        tolerance: f64,
    },

    #[error("decomposition reconstruction residual {residual:e} exceeds tolerance {tolerance:e}")]
    DecompositionFailed { residual: f64, tolerance: f64 },

    #[error("matrix exponential overflow: norm {norm:e} exceeds bound {bound:e}")]
    Overflow { norm: f64, bound: f64 },

    #[error("boundary conditions do not have the required block structure: bottom rows residual {residual:e} > tolerance {tolerance:e}")]
    IncompatibleBoundaryStructure { residual: f64, tolerance: f64 },

    #[error("shooting matrix is singular (condition estimate {cond:e}, threshold {threshold:e}); the problem has no unique solution")]
    SingularShootingMatrix { cond: f64, threshold: f64 },

    #[error("initial value is inconsistent with the algebraic constraints: residual {residual:e} > tolerance {tolerance:e}")]
    InconsistentInitialValue { residual: f64, tolerance: f64 },

    #[error("classical shooting matrix of the reference solver is singular (condition estimate {cond:e})")]
    OracleSingular { cond: f64 },

    #[error("exact determinant limited to n <= {max}, got n = {n}")]
    SizeLimitExceeded { n: usize, max: usize },
}

impl Error {
    pub(crate) fn dims(what: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            what,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
