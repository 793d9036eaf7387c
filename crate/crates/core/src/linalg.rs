//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

pub(crate) fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

pub(crate) fn norm1(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn is_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Singular values in descending order (empty for an empty matrix).
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    match to_faer(m).singular_values() {
        Ok(s) => s,
        Err(_) => vec![f64::NAN; m.nrows().min(m.ncols())],
    }
}

/// 2-norm condition number; infinite when the matrix is singular.
pub(crate) fn condition(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if min > 0.0 => max / min,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Orthonormal bases of the range and of the kernel of a square matrix,
/// split at the given numerical rank.
pub(crate) fn range_and_kernel(m: &DMatrix<f64>, rank: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Some((DMatrix::zeros(0, rank), DMatrix::zeros(0, 0)));
    }
    let svd = to_faer(m).svd().ok()?;
    let (u, v) = (svd.U(), svd.V());
    let range = DMatrix::from_fn(n, rank, |i, j| u[(i, j)]);
    let kernel = DMatrix::from_fn(n, n - rank, |i, j| v[(i, rank + j)]);
    Some((range, kernel))
}

/// `count` orthonormal columns spanning the dominant part of `range(w)`.
pub(crate) fn dominant_columns(w: &DMatrix<f64>, count: usize) -> Option<DMatrix<f64>> {
    let (rows, cols) = w.shape();
    if count == 0 || rows == 0 || cols == 0 {
        return Some(DMatrix::zeros(rows, count));
    }
    let svd = to_faer(w).thin_svd().ok()?;
    let u = svd.U();
    if u.ncols() < count {
        return None;
    }
    Some(DMatrix::from_fn(rows, count, |i, j| u[(i, j)]))
}

// nalgebra's SVD loses accuracy on some rank-deficient inputs, so every
// rank decision goes through faer.
fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub(crate) fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (r1, c1) = a.shape();
    let (r2, c2) = b.shape();
    let mut out = DMatrix::zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(a);
    out.view_mut((r1, c1), (r2, c2)).copy_from(b);
    out
}

pub(crate) fn concat(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

pub(crate) fn matrix_power(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Inverse through a pivoted LU factorization, `None` when exactly singular.
pub(crate) fn inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    m.clone().lu().try_inverse()
}

/// Chebyshev–Lobatto points of `[0, horizon]`, ascending, `count >= 2`.
pub fn chebyshev_grid(horizon: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "a Chebyshev grid needs at least two points");
    let m = (count - 1) as f64;
    (0..count)
        .map(|j| {
            if j == 0 {
                0.0
            } else if j == count - 1 {
                horizon
            } else {
                0.5 * horizon * (1.0 - (std::f64::consts::PI * j as f64 / m).cos())
            }
        })
        .collect()
}
