//! Random problems with known structure, for tests and benchmarks.
//!
//! Pencils are built as `E = L·diag(I, N)·R`, `A = L·diag(J, I)·R` with
//! `L`, `R` random matrices of bounded condition, so `n₁`, `n₂` and the
//! index are known in advance.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bvp::BvpProblem;
use crate::error::Result;
use crate::expm::matrix_exponential;
use crate::forcing::{ExpPolySignal, ExpPolyTerm, PhaseKind};
use crate::linalg::inverse;
use crate::pencil::{check_regularity, quasi_weierstrass, Pencil, RankTolerance};

/// Shape of a synthetic pencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PencilShape {
    pub n1: usize,
    pub n2: usize,
    /// Index; must be 1 when `n2 = 0` and `1..=n2` otherwise.
    pub nu: usize,
}

impl PencilShape {
    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    /// Uniform `n ∈ 1..=max_n`, `n₂ ∈ 0..=n`, `ν ∈ 1..=min(n₂, max_nu)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_n: usize, max_nu: usize) -> Self {
        let n = rng.random_range(1..=max_n);
        let n2 = rng.random_range(0..=n);
        let nu = if n2 == 0 { 1 } else { rng.random_range(1..=n2.min(max_nu)) };
        Self { n1: n - n2, n2, nu }
    }
}

/// A pencil together with the blocks it was built from.
#[derive(Debug, Clone)]
pub struct SyntheticPencil {
    pub pencil: Pencil,
    pub shape: PencilShape,
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub n: DMatrix<f64>,
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    gaussian(rng, n, n).qr().q()
}

/// `U diag(σ) Vᵀ` with singular values log-uniform in `[1, max_condition]`.
pub fn conditioned_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, max_condition: f64) -> DMatrix<f64> {
    let u = orthogonal(rng, n);
    let v = orthogonal(rng, n);
    let log_max = max_condition.max(1.0).ln();
    let sigma = DVector::from_fn(n, |i, _| {
        if i == 0 {
            1.0
        } else if i == 1 {
            max_condition.max(1.0)
        } else {
            (rng.random::<f64>() * log_max).exp()
        }
    });
    u * DMatrix::from_diagonal(&sigma) * v.transpose()
}

/// Nilpotent matrix of exact index `nu`, a direct sum of shift blocks with
/// random nonzero superdiagonals.
pub fn nilpotent_block<R: Rng + ?Sized>(rng: &mut R, size: usize, nu: usize) -> DMatrix<f64> {
    assert!(size == 0 || (1..=size).contains(&nu), "index must lie in 1..=size");
    let mut out = DMatrix::zeros(size, size);
    let mut start = 0;
    let mut first = true;
    while start < size {
        let remaining = size - start;
        let len = if first { nu } else { rng.random_range(1..=nu.min(remaining)) };
        first = false;
        for i in start..start + len - 1 {
            let magnitude = rng.random_range(0.5..1.5);
            out[(i, i + 1)] = if rng.random::<bool>() { magnitude } else { -magnitude };
        }
        start += len;
    }
    out
}

/// Random regular pencil of the given shape; `cond(L)·cond(R) ≤ max_condition`.
pub fn random_pencil<R: Rng + ?Sized>(rng: &mut R, shape: PencilShape, max_condition: f64) -> SyntheticPencil {
    let n = shape.n();
    let each = max_condition.sqrt();
    let (left_cond, right_cond) = (rng.random_range(1.0..=each), rng.random_range(1.0..=each));
    let left = conditioned_matrix(rng, n, left_cond);
    let right = conditioned_matrix(rng, n, right_cond);
    let j = gaussian(rng, shape.n1, shape.n1) * (1.5 / (shape.n1.max(1) as f64).sqrt());
    let nil = nilpotent_block(rng, shape.n2, shape.nu);

    let mut e_block = DMatrix::zeros(n, n);
    let mut a_block = DMatrix::zeros(n, n);
    e_block.view_mut((0, 0), (shape.n1, shape.n1)).fill_with_identity();
    e_block.view_mut((shape.n1, shape.n1), (shape.n2, shape.n2)).copy_from(&nil);
    a_block.view_mut((0, 0), (shape.n1, shape.n1)).copy_from(&j);
    a_block.view_mut((shape.n1, shape.n1), (shape.n2, shape.n2)).fill_with_identity();

    let e = &left * e_block * &right;
    let a = &left * a_block * &right;
    SyntheticPencil {
        pencil: Pencil::new(e, a).expect("synthetic pencil is square and finite"),
        shape,
        left,
        right,
        j,
        n: nil,
    }
}

/// One to three random exponential-polynomial(-trigonometric) terms.
pub fn random_forcing<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ExpPolySignal {
    let count = rng.random_range(1..=3);
    let terms = (0..count)
        .map(|_| {
            let kind = match rng.random_range(0..3) {
                0 => PhaseKind::None,
                1 => PhaseKind::Cos,
                _ => PhaseKind::Sin,
            };
            let omega = if kind == PhaseKind::None { 0.0 } else { rng.random_range(0.5..3.0) };
            let alpha = if rng.random::<bool>() { 0.0 } else { rng.random_range(-1.0..1.0) };
            let degree = rng.random_range(0..=2);
            let coeffs = (0..=degree)
                .map(|_| DVector::from_fn(dim, |_, _| StandardNormal.sample(rng)))
                .collect();
            ExpPolyTerm::new(alpha, omega, kind, coeffs).expect("valid random term")
        })
        .collect();
    ExpPolySignal::new(dim, terms).expect("terms share the dimension")
}

/// Boundary matrices whose last `n₂` rows vanish.
pub fn structured_boundary<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    n1: usize,
) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let mut b = DMatrix::zeros(n, n);
    let mut c = DMatrix::zeros(n, n);
    let mut d = DVector::zeros(n);
    b.rows_mut(0, n1).copy_from(&gaussian(rng, n1, n));
    c.rows_mut(0, n1).copy_from(&gaussian(rng, n1, n));
    d.rows_mut(0, n1).copy_from(&gaussian(rng, n1, 1));
    (b, c, d)
}

#[derive(Debug, Clone)]
pub struct SyntheticBvp {
    pub problem: BvpProblem,
    pub source: SyntheticPencil,
}

/// Random structured boundary value problem on `T ∈ [0.5, 2]`.
pub fn random_bvp<R: Rng + ?Sized>(rng: &mut R, shape: PencilShape, max_condition: f64) -> SyntheticBvp {
    let source = random_pencil(rng, shape, max_condition);
    let n = shape.n();
    let (b, c, d) = structured_boundary(rng, n, shape.n1);
    let horizon = rng.random_range(0.5..=2.0);
    let forcing = random_forcing(rng, n);
    let problem = BvpProblem::new(source.pencil.clone(), b, c, d, horizon, forcing).expect("consistent dimensions");
    SyntheticBvp { problem, source }
}

/// Random integer pencil with entries in `-range..=range`. About half of
/// the draws are made singular on purpose (shared null vector or a
/// dependent row pair), the rest are unconstrained.
pub fn random_integer_pencil<R: Rng + ?Sized>(rng: &mut R, n: usize, range: i64) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
    let draw = |rng: &mut R, sparse: bool| -> Vec<Vec<i64>> {
        (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        if sparse && rng.random::<f64>() < 0.6 {
                            0
                        } else {
                            rng.random_range(-range..=range)
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let sparse = rng.random::<bool>();
    let mut e = draw(rng, sparse);
    let mut a = draw(rng, false);
    match rng.random_range(0..4) {
        0 if n > 0 => {
            // Common zero column: (sE - A) e_k = 0 for all s.
            let k = rng.random_range(0..n);
            for row in e.iter_mut().chain(a.iter_mut()) {
                row[k] = 0;
            }
        }
        1 if n > 1 => {
            // Row k = m · row j in both matrices.
            let j = rng.random_range(0..n);
            let k = (j + rng.random_range(1..n)) % n;
            let m = rng.random_range(-2..=2);
            e[k] = e[j].iter().map(|v| v * m).collect();
            a[k] = a[j].iter().map(|v| v * m).collect();
        }
        _ => {}
    }
    (e, a)
}

/// Structured problem whose shooting matrix is singular by construction.
///
/// With `Q` and `J` taken from the default decomposition of the pencil,
/// `B̃₁` is random and `C̃₁ = (D - B̃₁)e^{-TJ}` for a random `D` of rank
/// `n₁ - deficiency`, so that `B̃₁ + C̃₁e^{TJ} = D`. `deficiency = n₁`
/// gives `C̃₁ = -B̃₁e^{-TJ}`.
pub fn singular_shooting_bvp<R: Rng + ?Sized>(
    rng: &mut R,
    shape: PencilShape,
    deficiency: usize,
    max_condition: f64,
) -> Result<SyntheticBvp> {
    assert!(shape.n1 >= 1, "a singular shooting matrix needs n1 >= 1");
    assert!((1..=shape.n1).contains(&deficiency), "deficiency must lie in 1..=n1");
    let base = random_bvp(rng, shape, max_condition);
    let pencil = base.problem.pencil();
    let cert = check_regularity(pencil, RankTolerance::Default);
    let decomp = quasi_weierstrass(pencil, &cert, RankTolerance::Default)?;
    let (n, n1) = (shape.n(), shape.n1);
    let horizon = base.problem.horizon();

    let b1 = gaussian(rng, n1, n1);
    let rank = n1 - deficiency;
    let target = gaussian(rng, n1, rank) * gaussian(rng, rank, n1);
    let c1 = (target - &b1) * matrix_exponential(&(decomp.j() * -horizon))?;
    let mut bt = DMatrix::zeros(n, n);
    let mut ct = DMatrix::zeros(n, n);
    bt.view_mut((0, 0), (n1, n1)).copy_from(&b1);
    ct.view_mut((0, 0), (n1, n1)).copy_from(&c1);
    bt.view_mut((0, n1), (n1, n - n1)).copy_from(&gaussian(rng, n1, n - n1));
    ct.view_mut((0, n1), (n1, n - n1)).copy_from(&gaussian(rng, n1, n - n1));
    let b = bt * decomp.q_inv();
    let c = ct * decomp.q_inv();
    let d = base.problem.d().clone();
    let problem = BvpProblem::new(pencil.clone(), b, c, d, horizon, base.problem.forcing().clone())?;
    Ok(SyntheticBvp { problem, source: base.source })
}

/// `x(0) = R⁻¹ [y₀; z(0) + shift]` where `z = -Σ Nⁱ g₂⁽ⁱ⁾` and `g = L⁻¹f`.
///
/// Built from the synthetic factors only. With a zero `shift` the value
/// is consistent; any nonzero `shift` violates the algebraic constraints.
pub fn initial_value(sp: &SyntheticPencil, forcing: &ExpPolySignal, y0: &DVector<f64>, shift: &DVector<f64>) -> DVector<f64> {
    let (n1, n2) = (sp.shape.n1, sp.shape.n2);
    assert_eq!(y0.len(), n1, "y0 must have dimension n1");
    assert_eq!(shift.len(), n2, "shift must have dimension n2");
    let left_inv = inverse(&sp.left).expect("synthetic factors are invertible");
    let right_inv = inverse(&sp.right).expect("synthetic factors are invertible");
    let g2 = forcing.left_multiply(&left_inv).expect("square factor").rows(n1, n2);
    let mut z0 = DVector::zeros(n2);
    let mut n_power = DMatrix::identity(n2, n2);
    let mut derivative = g2;
    for _ in 0..sp.shape.nu.max(1) {
        z0 -= &n_power * derivative.evaluate(0.0);
        n_power = &n_power * &sp.n;
        derivative = derivative.differentiate();
    }
    let mut canonical = DVector::zeros(n1 + n2);
    canonical.rows_mut(0, n1).copy_from(y0);
    canonical.rows_mut(n1, n2).copy_from(&(z0 + shift));
    right_inv * canonical
}
