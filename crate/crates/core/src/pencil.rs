//! Regularity analysis of the pencil `sE - A` and its quasi-Weierstrass
//! decomposition
//!
//! ```text
//! P E Q = [ I  0 ]      P A Q = [ J  0 ]
//!         [ 0  N ]              [ 0  I ]
//! ```
//!
//! with `N` nilpotent. `J` and `N` are arbitrary real representatives of
//! their similarity classes, not Jordan forms: everything downstream only
//! needs `e^{tJ}` and powers of `N`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, block_diag, condition, frobenius, inverse, matrix_power, singular_values};

/// Relative tolerance applied to reconstruction residuals `PEQ - diag(I, N)`
/// and `PAQ - diag(J, I)`, scaled by `1 + ‖E‖_F` and `1 + ‖A‖_F`.
pub const DECOMPOSITION_TOL: f64 = 1e-8;

/// Tolerance on `‖N^k‖_F`, absolute for `‖N‖_F ≤ 1` and relative to
/// `‖N‖_F^k` otherwise.
pub const NILPOTENCY_TOL: f64 = 1e-10;

/// The coefficient pair `(E, A)` of `E x' = A x + f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    e: DMatrix<f64>,
    a: DMatrix<f64>,
}

impl Pencil {
    pub fn new(e: DMatrix<f64>, a: DMatrix<f64>) -> Result<Self> {
        let n = e.nrows();
        if n == 0 {
            return Err(Error::dims("E", "n >= 1", "0"));
        }
        if !e.is_square() {
            return Err(Error::dims("E", format!("{n}x{n}"), format!("{}x{}", n, e.ncols())));
        }
        if a.shape() != (n, n) {
            return Err(Error::dims("A", format!("{n}x{n}"), format!("{}x{}", a.nrows(), a.ncols())));
        }
        if !linalg::is_finite(&e) {
            return Err(Error::NonFinite("E"));
        }
        if !linalg::is_finite(&a) {
            return Err(Error::NonFinite("A"));
        }
        Ok(Self { e, a })
    }

    pub fn e(&self) -> &DMatrix<f64> {
        &self.e
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.e.nrows()
    }

    /// `λE - A`
    pub fn shifted(&self, lambda: f64) -> DMatrix<f64> {
        &self.e * lambda - &self.a
    }

    pub fn is_e_zero(&self) -> bool {
        self.e.iter().all(|&v| v == 0.0)
    }
}

/// Numerical rank threshold policy.
///
/// A singular value counts when it exceeds `factor · scale`. For `λE - A`
/// the scale is its largest singular value and the default factor `n · ε`.
/// The kernel chain of `M = (λE - A)⁻¹E` is decided against `‖M‖₂`, with
/// the default factor additionally multiplied by the condition number of
/// `λE - A`, which bounds the relative error of `M`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RankTolerance {
    #[default]
    Default,
    /// Fixed factor, used as is for every rank decision.
    Relative(f64),
}

impl RankTolerance {
    fn base_factor(&self, n: usize) -> f64 {
        match *self {
            RankTolerance::Default => n as f64 * f64::EPSILON,
            RankTolerance::Relative(r) => r,
        }
    }

    fn chain_factor(&self, n: usize, shift_condition: f64) -> f64 {
        match *self {
            RankTolerance::Default => {
                // The extra factor covers error growth through up to n projections.
                (n as f64).powi(2) * f64::EPSILON * shift_condition.max(1.0) * 10.0
            }
            RankTolerance::Relative(r) => r,
        }
    }
}

/// Outcome of [`check_regularity`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityCertificate {
    pub regular: bool,
    /// `(λ, σ_min(λE - A))` at every probe.
    pub probe_points: Vec<(f64, f64)>,
    /// Coefficients of `det(sE - A)` in ascending powers, interpolated from
    /// the probe determinants.
    pub det_poly_coeffs: Option<Vec<f64>>,
    pub chosen_lambda: Option<f64>,
    /// Threshold that `σ_min(λ*E - A)` had to exceed.
    pub rank_threshold: Option<f64>,
}

/// Probe sequence `0, 1, -1, 2, -2, ...`, `count` values.
pub fn probe_sequence(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let k = i.div_ceil(2) as f64;
            if i % 2 == 1 {
                k
            } else {
                -k
            }
        })
        .map(|v| if v == 0.0 { 0.0 } else { v })
        .collect()
}

/// Decides whether `det(sE - A)` is the zero polynomial.
///
/// The determinant has degree at most `n`, so it vanishes identically iff it
/// vanishes at `n + 1` distinct probes; a probe counts as nonzero when
/// `σ_min(λE - A)` exceeds the rank threshold.
pub fn check_regularity(pencil: &Pencil, tol: RankTolerance) -> RegularityCertificate {
    let n = pencil.dim();
    let probes = probe_sequence(n + 1);
    let factor = tol.base_factor(n);

    let mut probe_points = Vec::with_capacity(probes.len());
    let mut dets = Vec::with_capacity(probes.len());
    let mut best: Option<(f64, f64, f64)> = None;
    for &lambda in &probes {
        let shifted = pencil.shifted(lambda);
        let sv = singular_values(&shifted);
        let sigma_max = sv[0];
        let sigma_min = sv[sv.len() - 1];
        let threshold = factor * sigma_max;
        probe_points.push((lambda, sigma_min));
        dets.push(shifted.lu().determinant());
        if sigma_min > threshold && best.is_none_or(|(_, s, _)| sigma_min > s) {
            best = Some((lambda, sigma_min, threshold));
        }
    }

    RegularityCertificate {
        regular: best.is_some(),
        probe_points,
        det_poly_coeffs: interpolate_coefficients(&probes, &dets),
        chosen_lambda: best.map(|b| b.0),
        rank_threshold: best.map(|b| b.2),
    }
}

/// Monomial coefficients of the interpolating polynomial through `(xs, ys)`.
fn interpolate_coefficients(xs: &[f64], ys: &[f64]) -> Option<Vec<f64>> {
    let m = xs.len();
    let vandermonde = DMatrix::from_fn(m, m, |i, j| xs[i].powi(j as i32));
    let rhs = DVector::from_column_slice(ys);
    vandermonde.lu().solve(&rhs).map(|c| c.iter().copied().collect())
}

/// Quasi-Weierstrass data of a regular pencil.
#[derive(Debug, Clone, PartialEq)]
pub struct QwfDecomposition {
    p: DMatrix<f64>,
    q: DMatrix<f64>,
    q_inv: DMatrix<f64>,
    j: DMatrix<f64>,
    n_mat: DMatrix<f64>,
    n1: usize,
    n2: usize,
    nu: usize,
    lambda_star: f64,
    diagnostics: DecompositionDiagnostics,
}

/// Conditioning and residual figures recorded while decomposing.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DecompositionDiagnostics {
    pub lambda_star: f64,
    pub shift_condition: f64,
    /// Relative rank threshold applied to `‖M‖₂`.
    pub rank_factor: f64,
    /// `rank((λ*E - A)⁻¹E)^k` for `k = 0..=ν`.
    pub rank_sequence: Vec<usize>,
    pub cond_p: f64,
    pub cond_q: f64,
    pub residual_e: f64,
    pub residual_a: f64,
    pub tolerance_e: f64,
    pub tolerance_a: f64,
    pub nilpotency_residual: f64,
}

impl QwfDecomposition {
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }
    pub fn q_inv(&self) -> &DMatrix<f64> {
        &self.q_inv
    }
    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }
    pub fn n(&self) -> &DMatrix<f64> {
        &self.n_mat
    }
    pub fn n1(&self) -> usize {
        self.n1
    }
    pub fn n2(&self) -> usize {
        self.n2
    }
    pub fn nu(&self) -> usize {
        self.nu
    }
    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }
    pub fn dim(&self) -> usize {
        self.n1 + self.n2
    }
    pub fn diagnostics(&self) -> &DecompositionDiagnostics {
        &self.diagnostics
    }

    /// Builds a decomposition from explicit blocks, checking the
    /// reconstruction identities against `pencil`.
    pub fn from_parts(
        pencil: &Pencil,
        p: DMatrix<f64>,
        q: DMatrix<f64>,
        j: DMatrix<f64>,
        n_mat: DMatrix<f64>,
    ) -> Result<Self> {
        let n = pencil.dim();
        let (n1, n2) = (j.nrows(), n_mat.nrows());
        if n1 + n2 != n || p.shape() != (n, n) || q.shape() != (n, n) {
            return Err(Error::dims("decomposition blocks", format!("n1 + n2 = {n}"), format!("{n1} + {n2}")));
        }
        let q_inv = inverse(&q).ok_or(Error::DecompositionFailed {
            residual: f64::INFINITY,
            tolerance: DECOMPOSITION_TOL,
        })?;
        let nu = nilpotency_index(&n_mat);
        let diagnostics = DecompositionDiagnostics {
            lambda_star: f64::NAN,
            shift_condition: f64::NAN,
            rank_factor: f64::NAN,
            rank_sequence: Vec::new(),
            cond_p: condition(&p),
            cond_q: condition(&q),
            residual_e: 0.0,
            residual_a: 0.0,
            tolerance_e: 0.0,
            tolerance_a: 0.0,
            nilpotency_residual: frobenius(&matrix_power(&n_mat, nu)),
        };
        let mut d = Self { p, q, q_inv, j, n_mat, n1, n2, nu, lambda_star: f64::NAN, diagnostics };
        d.check_reconstruction(pencil)?;
        Ok(d)
    }

    /// `‖PEQ - diag(I, N)‖_F` and `‖PAQ - diag(J, I)‖_F`.
    pub fn reconstruction_residuals(&self, pencil: &Pencil) -> (f64, f64) {
        let ident1 = DMatrix::identity(self.n1, self.n1);
        let ident2 = DMatrix::identity(self.n2, self.n2);
        let pe = &self.p * pencil.e() * &self.q - block_diag(&ident1, &self.n_mat);
        let pa = &self.p * pencil.a() * &self.q - block_diag(&self.j, &ident2);
        (frobenius(&pe), frobenius(&pa))
    }

    fn check_reconstruction(&mut self, pencil: &Pencil) -> Result<()> {
        let (re, ra) = self.reconstruction_residuals(pencil);
        let te = DECOMPOSITION_TOL * (1.0 + frobenius(pencil.e()));
        let ta = DECOMPOSITION_TOL * (1.0 + frobenius(pencil.a()));
        self.diagnostics.residual_e = re;
        self.diagnostics.residual_a = ra;
        self.diagnostics.tolerance_e = te;
        self.diagnostics.tolerance_a = ta;
        // Written so that NaN residuals fail too.
        if !(re <= te) {
            return Err(Error::DecompositionFailed { residual: re, tolerance: te });
        }
        if !(ra <= ta) {
            return Err(Error::DecompositionFailed { residual: ra, tolerance: ta });
        }
        Ok(())
    }
}

/// Quasi-Weierstrass decomposition at the certificate's chosen shift.
///
/// Panics if the certificate does not certify regularity.
pub fn quasi_weierstrass(
    pencil: &Pencil,
    cert: &RegularityCertificate,
    tol: RankTolerance,
) -> Result<QwfDecomposition> {
    let lambda = cert
        .chosen_lambda
        .expect("quasi_weierstrass requires a regularity certificate with a chosen shift");
    quasi_weierstrass_at(pencil, lambda, tol)
}

/// Quasi-Weierstrass decomposition with an explicit shift `λ*`.
///
/// With `M = (λ*E - A)⁻¹E`, the index is where the rank sequence of `M^k`
/// stalls; `range(M^ν)` and `ker(M^ν)` split `M` into an invertible and a
/// nilpotent block, from which `J = λ*I - M₁⁻¹` and `N = (λ*M₂ - I)⁻¹M₂`.
/// The kernel basis follows the chain `ker M ⊂ ker M² ⊂ ...`, so `N` comes
/// out strictly block upper triangular and `N^ν` vanishes exactly.
pub fn quasi_weierstrass_at(pencil: &Pencil, lambda: f64, tol: RankTolerance) -> Result<QwfDecomposition> {
    let n = pencil.dim();
    let shifted = pencil.shifted(lambda);
    let sv = singular_values(&shifted);
    let shift_threshold = tol.base_factor(n) * sv[0];
    let sigma_min = sv[n - 1];
    if !(sigma_min > shift_threshold) {
        return Err(Error::SingularTransform { lambda, sigma_min, tolerance: shift_threshold });
    }
    let shift_condition = sv[0] / sigma_min;
    let shifted_lu = shifted.clone().lu();
    let m = shifted_lu
        .solve(pencil.e())
        .ok_or(Error::SingularTransform { lambda, sigma_min, tolerance: shift_threshold })?;

    let rank_factor = tol.chain_factor(n, shift_condition);
    let rank_threshold = rank_factor * linalg::spectral_norm(&m);
    let failed = Error::DecompositionFailed { residual: f64::NAN, tolerance: DECOMPOSITION_TOL };
    let chain = kernel_chain(&m, rank_threshold).ok_or(failed.clone())?;
    let ranks = chain.ranks;
    let nu = ranks.len() - 1;
    let n1 = ranks[nu];
    let n2 = n - n1;

    let mut range = DMatrix::identity(n, n);
    for &r in &ranks[1..] {
        range = linalg::dominant_columns(&(&m * &range), r).ok_or(failed.clone())?;
    }
    let levels = chain.levels;
    let mut q = DMatrix::zeros(n, n);
    q.view_mut((0, 0), (n, n1)).copy_from(&range);
    q.view_mut((0, n1), (n, n2)).copy_from(&chain.basis);
    let q_lu = q.clone().lu();
    let q_inv = q_lu.try_inverse().ok_or(Error::DecompositionFailed {
        residual: f64::INFINITY,
        tolerance: DECOMPOSITION_TOL,
    })?;

    let m_blocks = &q_inv * &m * &q;
    let m1 = m_blocks.view((0, 0), (n1, n1)).into_owned();
    let mut m2 = m_blocks.view((n1, n1), (n2, n2)).into_owned();
    // M maps level k of the kernel chain into the levels below it; what
    // remains at or below the block diagonal is rounding noise.
    for (i, &li) in levels.iter().enumerate() {
        for (j, &lj) in levels.iter().enumerate() {
            if li >= lj {
                m2[(i, j)] = 0.0;
            }
        }
    }
    let m1_inv = inverse(&m1).ok_or(Error::DecompositionFailed {
        residual: f64::INFINITY,
        tolerance: DECOMPOSITION_TOL,
    })?;
    let chain = &m2 * lambda - DMatrix::identity(n2, n2);
    let chain_inv = inverse(&chain).ok_or(Error::DecompositionFailed {
        residual: f64::INFINITY,
        tolerance: DECOMPOSITION_TOL,
    })?;

    let j = DMatrix::identity(n1, n1) * lambda - &m1_inv;
    let mut n_mat = &chain_inv * &m2;
    for (i, &li) in levels.iter().enumerate() {
        for (j, &lj) in levels.iter().enumerate() {
            if li >= lj {
                n_mat[(i, j)] = 0.0;
            }
        }
    }
    let shifted_inv = shifted_lu.try_inverse().ok_or(Error::SingularTransform {
        lambda,
        sigma_min,
        tolerance: shift_threshold,
    })?;
    let p = block_diag(&m1_inv, &chain_inv) * &q_inv * shifted_inv;

    let nilpotency_residual = nilpotency_residual(&n_mat, nu);
    let diagnostics = DecompositionDiagnostics {
        lambda_star: lambda,
        shift_condition,
        rank_factor,
        rank_sequence: ranks,
        cond_p: condition(&p),
        cond_q: condition(&q),
        residual_e: 0.0,
        residual_a: 0.0,
        tolerance_e: 0.0,
        tolerance_a: 0.0,
        nilpotency_residual,
    };
    let mut decomp = QwfDecomposition {
        p,
        q,
        q_inv,
        j,
        n_mat,
        n1,
        n2,
        nu,
        lambda_star: lambda,
        diagnostics,
    };
    decomp.check_reconstruction(pencil)?;
    if !(nilpotency_residual <= NILPOTENCY_TOL) {
        return Err(Error::DecompositionFailed {
            residual: nilpotency_residual,
            tolerance: NILPOTENCY_TOL,
        });
    }
    Ok(decomp)
}

struct KernelChain {
    /// `rank(M^k)` for `k = 0..=ν`.
    ranks: Vec<usize>,
    /// Orthonormal basis of `ker(M^ν)` ordered along `ker M ⊂ ker M² ⊂ ...`.
    basis: DMatrix<f64>,
    /// Chain level (1-based) of every basis column.
    levels: Vec<usize>,
}

/// Builds `ker(M^k)` as the kernel of `(I - KKᵀ)M` with `K` a basis of
/// `ker(M^{k-1})`, which never forms a power of `M`. Stops once the
/// kernel stops growing.
fn kernel_chain(m: &DMatrix<f64>, threshold: f64) -> Option<KernelChain> {
    let n = m.nrows();
    let mut ranks = vec![n];
    let mut basis = DMatrix::zeros(n, 0);
    let mut levels = Vec::new();
    for k in 1..=n + 1 {
        let projected = m - &basis * (basis.transpose() * m);
        let rank = numerical_rank(&projected, threshold);
        let previous = ranks[k - 1];
        if rank >= previous {
            break;
        }
        ranks.push(rank);
        let (_, kernel) = linalg::range_and_kernel(&projected, rank)?;
        let fresh = previous - rank;
        let new_part = &kernel - &basis * (basis.transpose() * &kernel);
        let new_cols = linalg::dominant_columns(&new_part, fresh)?;
        let width = basis.ncols();
        basis = basis.insert_columns(width, fresh, 0.0);
        basis.view_mut((0, width), (n, fresh)).copy_from(&new_cols);
        levels.extend(std::iter::repeat_n(k, fresh));
    }
    if ranks.len() == 1 {
        // M is invertible: ν = 1 by convention.
        ranks.push(n);
    }
    Some(KernelChain { ranks, basis, levels })
}

fn numerical_rank(m: &DMatrix<f64>, threshold: f64) -> usize {
    singular_values(m).iter().filter(|&&s| s > threshold).count()
}

/// `‖N^ν‖_F / max(1, ‖N‖_F)^ν`.
fn nilpotency_residual(n_mat: &DMatrix<f64>, nu: usize) -> f64 {
    let scale = frobenius(n_mat).max(1.0);
    frobenius(&matrix_power(&(n_mat / scale), nu))
}

/// Index of nilpotency of `N` from its powers: the smallest `k ≥ 1` with
/// `‖N^k‖_F ≤ NILPOTENCY_TOL · max(1, ‖N‖_F)^k`; 1 for an empty block.
pub fn nilpotency_index(n_mat: &DMatrix<f64>) -> usize {
    let size = n_mat.nrows();
    if size == 0 {
        return 1;
    }
    let normalized = n_mat / frobenius(n_mat).max(1.0);
    let mut power = normalized.clone();
    for k in 1..=size {
        if frobenius(&power) <= NILPOTENCY_TOL {
            return k;
        }
        power = &power * &normalized;
    }
    // Not nilpotent to tolerance; report the largest admissible index.
    size
}

/// The pencil index `ν`, re-derived from the powers of `N`.
pub fn pencil_index(decomp: &QwfDecomposition) -> usize {
    let nu = nilpotency_index(decomp.n());
    debug_assert_eq!(nu, decomp.nu(), "stored index disagrees with powers of N");
    nu
}
