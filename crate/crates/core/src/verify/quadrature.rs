//! Adaptive Gauss-Kronrod quadrature for vector integrands, used as a
//! reference for the closed-form convolution.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::expm::matrix_exponential;
use crate::forcing::ExpPolySignal;

// 15-point Kronrod nodes on [-1, 1] (non-negative half) and weights; every
// odd-indexed node is also a 7-point Gauss node.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: usize = 40;

/// Result of [`gauss_kronrod`].
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub value: DVector<f64>,
    /// Sum of the local Kronrod-minus-Gauss differences.
    pub error_estimate: f64,
    pub evaluations: usize,
}

fn kronrod_panel<F>(f: &F, a: f64, b: f64, dim: usize) -> (DVector<f64>, f64)
where
    F: Fn(f64) -> DVector<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = DVector::zeros(dim);
    let mut gauss = DVector::zeros(dim);
    let mid = f(center);
    kronrod += &mid * WGK[7];
    gauss += &mid * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += &pair * WGK[i];
        if i % 2 == 1 {
            gauss += &pair * WG[i / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    let err = (&kronrod - &gauss).amax();
    (kronrod, err)
}

/// `∫ₐᵇ f(s) ds` to absolute tolerance `tol` by recursive bisection of a
/// 7/15-point Gauss-Kronrod panel.
pub fn gauss_kronrod<F>(f: F, a: f64, b: f64, dim: usize, tol: f64) -> Quadrature
where
    F: Fn(f64) -> DVector<f64>,
{
    let mut evaluations = 0;
    let mut stack = vec![(a, b, tol, 0usize)];
    let mut value = DVector::zeros(dim);
    let mut error_estimate = 0.0;
    while let Some((lo, hi, local_tol, depth)) = stack.pop() {
        let (panel, err) = kronrod_panel(&f, lo, hi, dim);
        evaluations += 15;
        if err <= local_tol || depth >= MAX_DEPTH {
            value += panel;
            error_estimate += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * local_tol, depth + 1));
            stack.push((mid, hi, 0.5 * local_tol, depth + 1));
        }
    }
    Quadrature { value, error_estimate, evaluations }
}

/// `∫₀ᵗ e^{(t-s)J} sig(s) ds` by quadrature of the integrand.
pub fn convolution_by_quadrature(j: &DMatrix<f64>, sig: &ExpPolySignal, t: f64, tol: f64) -> Result<DVector<f64>> {
    // Validates the exponential once so the integrand can unwrap.
    matrix_exponential(&(j * t))?;
    let integrand = |s: f64| {
        let propagator = matrix_exponential(&(j * (t - s))).expect("exponential bounded on [0, t]");
        propagator * sig.evaluate(s)
    };
    Ok(gauss_kronrod(integrand, 0.0, t, j.nrows(), tol).value)
}
