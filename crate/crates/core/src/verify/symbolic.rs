//! Exact `det(sE - A)` for small integer pencils by fraction-free
//! (Bareiss) elimination over `Z[s]`.

use crate::error::{Error, Result};

pub const MAX_SYMBOLIC_DIM: usize = 6;

/// Integer polynomial, coefficients in ascending powers, no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntPoly(Vec<i128>);

impl IntPoly {
    pub fn new(mut coeffs: Vec<i128>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Self(coeffs)
    }

    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * s + c as f64)
    }

    fn mul(&self, other: &IntPoly) -> IntPoly {
        if self.is_zero() || other.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![0i128; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }

    fn sub(&self, other: &IntPoly) -> IntPoly {
        let len = self.0.len().max(other.0.len());
        let out = (0..len)
            .map(|i| self.0.get(i).copied().unwrap_or(0) - other.0.get(i).copied().unwrap_or(0))
            .collect();
        IntPoly::new(out)
    }

    fn neg(&self) -> IntPoly {
        IntPoly(self.0.iter().map(|c| -c).collect())
    }

    /// Exact quotient; panics if `divisor` does not divide `self` in `Z[s]`.
    fn div_exact(&self, divisor: &IntPoly) -> IntPoly {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        if self.is_zero() {
            return IntPoly::zero();
        }
        let mut rem = self.0.clone();
        let dl = divisor.0.len();
        let lead = *divisor.0.last().unwrap();
        assert!(rem.len() >= dl, "inexact polynomial division");
        let mut quot = vec![0i128; rem.len() - dl + 1];
        for k in (0..quot.len()).rev() {
            let top = rem[k + dl - 1];
            assert!(top % lead == 0, "inexact polynomial division");
            let q = top / lead;
            quot[k] = q;
            for (i, d) in divisor.0.iter().enumerate() {
                rem[k + i] -= q * d;
            }
        }
        assert!(rem.iter().all(|&r| r == 0), "inexact polynomial division");
        IntPoly::new(quot)
    }
}

/// Coefficients of `det(sE - A)` for integer `E`, `A` of size `n ≤ 6`.
pub fn symbolic_determinant(e: &[Vec<i64>], a: &[Vec<i64>]) -> Result<IntPoly> {
    let n = e.len();
    if n > MAX_SYMBOLIC_DIM {
        return Err(Error::SizeLimitExceeded { n, max: MAX_SYMBOLIC_DIM });
    }
    if a.len() != n || e.iter().chain(a.iter()).any(|row| row.len() != n) {
        return Err(Error::dims("integer pencil", format!("{n}x{n}"), "ragged rows"));
    }
    if n == 0 {
        return Ok(IntPoly::new(vec![1]));
    }
    let mut m: Vec<Vec<IntPoly>> = (0..n)
        .map(|i| (0..n).map(|j| IntPoly::new(vec![-(a[i][j] as i128), e[i][j] as i128])).collect())
        .collect();

    let mut sign = 1;
    let mut prev = IntPoly::new(vec![1]);
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return Ok(IntPoly::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = m[k][k].mul(&m[i][j]).sub(&m[i][k].mul(&m[k][j]));
                m[i][j] = num.div_exact(&prev);
            }
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    Ok(if sign < 0 { det.neg() } else { det })
}
