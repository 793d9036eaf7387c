//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! of degree 3, 5, 7, 9 or 13 (Higham, SIAM J. Matrix Anal. Appl. 26(4), 2005).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{is_finite, norm1};

/// Default bound on the 1-norm of the argument.
pub const DEFAULT_EXPM_NORM_BOUND: f64 = 1.0e5;

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Largest 1-norm for which each approximant is accurate to unit roundoff.
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539398330063230e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068e0;
const THETA13: f64 = 5.371920351148152e0;

/// `e^M` with the default norm bound.
pub fn matrix_exponential(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    matrix_exponential_bounded(m, DEFAULT_EXPM_NORM_BOUND)
}

/// `e^M`, rejecting arguments whose 1-norm exceeds `bound` and results that
/// are not finite.
pub fn matrix_exponential_bounded(m: &DMatrix<f64>, bound: f64) -> Result<DMatrix<f64>> {
    assert!(m.is_square(), "matrix exponential of a non-square matrix");
    if !is_finite(m) {
        return Err(Error::NonFinite("matrix exponential argument"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let norm = norm1(m);
    if norm > bound {
        return Err(Error::Overflow { norm, bound });
    }

    let out = if norm <= THETA3 {
        pade_low(m, &PADE3)
    } else if norm <= THETA5 {
        pade_low(m, &PADE5)
    } else if norm <= THETA7 {
        pade_low(m, &PADE7)
    } else if norm <= THETA9 {
        pade_low(m, &PADE9)
    } else {
        let squarings = if norm > THETA13 {
            (norm / THETA13).log2().ceil().max(0.0) as i32
        } else {
            0
        };
        let scaled = m * 2f64.powi(-squarings);
        let mut r = pade13(&scaled);
        for _ in 0..squarings {
            r = &r * &r;
        }
        r
    };

    if !is_finite(&out) {
        return Err(Error::Overflow { norm, bound });
    }
    Ok(out)
}

/// Padé approximant of degree 3..9: U = M·Σ b_{2k+1} M^{2k}, V = Σ b_{2k} M^{2k}.
fn pade_low(m: &DMatrix<f64>, b: &[f64]) -> DMatrix<f64> {
    let n = m.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let m2 = m * m;
    let mut even_pow = ident.clone();
    let mut u = DMatrix::<f64>::zeros(n, n);
    let mut v = DMatrix::<f64>::zeros(n, n);
    for k in 0..b.len() / 2 {
        if k > 0 {
            even_pow = &even_pow * &m2;
        }
        u += &even_pow * b[2 * k + 1];
        v += &even_pow * b[2 * k];
    }
    let u = m * u;
    solve_pade(&u, &v)
}

fn pade13(m: &DMatrix<f64>) -> DMatrix<f64> {
    let b = &PADE13;
    let n = m.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let m2 = m * m;
    let m4 = &m2 * &m2;
    let m6 = &m4 * &m2;

    let inner_u = &m6 * b[13] + &m4 * b[11] + &m2 * b[9];
    let u = m * (&m6 * inner_u + &m6 * b[7] + &m4 * b[5] + &m2 * b[3] + &ident * b[1]);
    let inner_v = &m6 * b[12] + &m4 * b[10] + &m2 * b[8];
    let v = &m6 * inner_v + &m6 * b[6] + &m4 * b[4] + &m2 * b[2] + &ident * b[0];
    solve_pade(&u, &v)
}

/// r = (V - U)⁻¹ (V + U)
fn solve_pade(u: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for arguments within theta")
}
