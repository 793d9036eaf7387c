//! Forcing functions of exponential-polynomial-trigonometric type,
//!
//! ```text
//! f(t) = Σ e^{αt} · {1 | cos ωt | sin ωt} · (v₀ + v₁ t + … + v_m t^m)
//! ```
//!
//! The class is closed under differentiation and constant left
//! multiplication, and its convolution with `e^{tJ}` has a closed form via
//! the exponential of a block upper-triangular matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expm::matrix_exponential;

/// Trigonometric factor of a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    None,
    Cos,
    Sin,
}

/// `e^{αt} · trig(ωt) · Σ_k coeffs[k] t^k`
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPolyTerm {
    alpha: f64,
    omega: f64,
    kind: PhaseKind,
    coeffs: Vec<DVector<f64>>,
}

impl ExpPolyTerm {
    pub fn new(alpha: f64, omega: f64, kind: PhaseKind, coeffs: Vec<DVector<f64>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::dims("term coefficients", "at least one vector", "none"));
        }
        let dim = coeffs[0].len();
        if let Some(bad) = coeffs.iter().find(|v| v.len() != dim) {
            return Err(Error::dims("term coefficients", dim, bad.len()));
        }
        if !alpha.is_finite() || !omega.is_finite() || coeffs.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("forcing term"));
        }
        if kind == PhaseKind::None && omega != 0.0 {
            return Err(Error::dims("term frequency", "omega = 0 for kind none", omega));
        }
        Ok(Self { alpha, omega, kind, coeffs })
    }

    /// Constant vector term.
    pub fn constant(v: DVector<f64>) -> Self {
        Self { alpha: 0.0, omega: 0.0, kind: PhaseKind::None, coeffs: vec![v] }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn kind(&self) -> PhaseKind {
        self.kind
    }
    pub fn coeffs(&self) -> &[DVector<f64>] {
        &self.coeffs
    }
    pub fn dim(&self) -> usize {
        self.coeffs[0].len()
    }
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn key(&self) -> (u64, u64, PhaseKind) {
        (self.alpha.to_bits(), self.omega.to_bits(), self.kind)
    }

    fn envelope(&self, t: f64) -> f64 {
        let trig = match self.kind {
            PhaseKind::None => 1.0,
            PhaseKind::Cos => (self.omega * t).cos(),
            PhaseKind::Sin => (self.omega * t).sin(),
        };
        (self.alpha * t).exp() * trig
    }

    fn polynomial(&self, t: f64) -> DVector<f64> {
        // Horner
        let mut acc = self.coeffs[self.degree()].clone();
        for v in self.coeffs.iter().rev().skip(1) {
            acc *= t;
            acc += v;
        }
        acc
    }

    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|v| v.iter().all(|&x| x == 0.0))
    }
}

/// A vector-valued forcing `f: R → R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPolySignal {
    dim: usize,
    terms: Vec<ExpPolyTerm>,
}

impl ExpPolySignal {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn new(dim: usize, terms: Vec<ExpPolyTerm>) -> Result<Self> {
        if let Some(bad) = terms.iter().find(|t| t.dim() != dim) {
            return Err(Error::dims("forcing term", dim, bad.dim()));
        }
        Ok(Self { dim, terms })
    }

    pub fn constant(v: DVector<f64>) -> Self {
        Self { dim: v.len(), terms: vec![ExpPolyTerm::constant(v)] }
    }

    /// Vector polynomial `Σ coeffs[k] t^k`.
    pub fn polynomial(coeffs: Vec<DVector<f64>>) -> Result<Self> {
        let term = ExpPolyTerm::new(0.0, 0.0, PhaseKind::None, coeffs)?;
        Self::new(term.dim(), vec![term])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[ExpPolyTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(ExpPolyTerm::is_zero)
    }

    pub fn evaluate(&self, t: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for term in &self.terms {
            out += term.polynomial(t) * term.envelope(t);
        }
        out
    }

    /// Exact derivative within the class.
    pub fn differentiate(&self) -> ExpPolySignal {
        let mut out = Vec::new();
        for term in &self.terms {
            let m = term.degree();
            // α p + p'
            let same: Vec<DVector<f64>> = (0..=m)
                .map(|k| {
                    let mut v = &term.coeffs[k] * term.alpha;
                    if k < m {
                        v += &term.coeffs[k + 1] * (k + 1) as f64;
                    }
                    v
                })
                .collect();
            out.push(ExpPolyTerm { coeffs: same, ..term.clone() });
            // d/dt cos ωt = -ω sin ωt, d/dt sin ωt = ω cos ωt
            let partner = match term.kind {
                PhaseKind::None => None,
                PhaseKind::Cos => Some((PhaseKind::Sin, -term.omega)),
                PhaseKind::Sin => Some((PhaseKind::Cos, term.omega)),
            };
            if let Some((kind, factor)) = partner {
                if factor != 0.0 {
                    let coeffs = term.coeffs.iter().map(|v| v * factor).collect();
                    out.push(ExpPolyTerm { kind, coeffs, ..term.clone() });
                }
            }
        }
        Self { dim: self.dim, terms: merge_terms(out) }
    }

    /// The `order`-th derivative.
    pub fn derivative(&self, order: usize) -> ExpPolySignal {
        (0..order).fold(self.clone(), |s, _| s.differentiate())
    }

    /// `t ↦ M f(t)`.
    pub fn left_multiply(&self, m: &DMatrix<f64>) -> Result<ExpPolySignal> {
        if m.ncols() != self.dim {
            return Err(Error::dims("left_multiply", format!("{} columns", self.dim), m.ncols()));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| ExpPolyTerm {
                coeffs: t.coeffs.iter().map(|v| m * v).collect(),
                ..t.clone()
            })
            .collect();
        Ok(Self { dim: m.nrows(), terms })
    }

    /// Rows `start..start + len` of the signal.
    pub fn rows(&self, start: usize, len: usize) -> ExpPolySignal {
        assert!(start + len <= self.dim, "row range out of bounds");
        let terms = self
            .terms
            .iter()
            .map(|t| ExpPolyTerm {
                coeffs: t.coeffs.iter().map(|v| v.rows(start, len).into_owned()).collect(),
                ..t.clone()
            })
            .collect();
        Self { dim: len, terms }
    }

    pub fn scale(&self, factor: f64) -> ExpPolySignal {
        let terms = self
            .terms
            .iter()
            .map(|t| ExpPolyTerm {
                coeffs: t.coeffs.iter().map(|v| v * factor).collect(),
                ..t.clone()
            })
            .collect();
        Self { dim: self.dim, terms }
    }

    /// Pointwise sum.
    pub fn add(&self, other: &ExpPolySignal) -> Result<ExpPolySignal> {
        if other.dim != self.dim {
            return Err(Error::dims("signal sum", self.dim, other.dim));
        }
        let terms = self.terms.iter().chain(other.terms.iter()).cloned().collect();
        Ok(Self { dim: self.dim, terms: merge_terms(terms) })
    }
}

/// Combines terms sharing `(α, ω, kind)` and drops identically zero ones.
fn merge_terms(terms: Vec<ExpPolyTerm>) -> Vec<ExpPolyTerm> {
    let mut merged: Vec<ExpPolyTerm> = Vec::new();
    for term in terms {
        match merged.iter_mut().find(|m| m.key() == term.key()) {
            Some(existing) => {
                if existing.coeffs.len() < term.coeffs.len() {
                    let dim = existing.dim();
                    existing.coeffs.resize(term.coeffs.len(), DVector::zeros(dim));
                }
                for (acc, v) in existing.coeffs.iter_mut().zip(&term.coeffs) {
                    *acc += v;
                }
            }
            None => merged.push(term),
        }
    }
    for term in &mut merged {
        while term.coeffs.len() > 1 && term.coeffs.last().is_some_and(|v| v.iter().all(|&x| x == 0.0)) {
            term.coeffs.pop();
        }
    }
    merged.retain(|t| !t.is_zero());
    merged
}

/// `∫₀ᵗ e^{(t-s)J} f(s) ds`, exact up to the accuracy of one matrix
/// exponential per term.
///
/// Each term `g(s) = V z(s)` is realised by a linear system `z' = S z`,
/// `z(0) = z₀`; then `y(t) = ∫₀ᵗ e^{(t-s)J} g(s) ds` is the top block of the
/// solution of `[y; z]' = [[J, V], [0, S]] [y; z]` started at `[0; z₀]`.
pub fn convolve_with_exp(j: &DMatrix<f64>, sig: &ExpPolySignal, t: f64) -> Result<DVector<f64>> {
    let n1 = j.nrows();
    if !j.is_square() || sig.dim() != n1 {
        return Err(Error::dims("convolution", format!("{n1}x{n1} J with dim-{n1} signal"), sig.dim()));
    }
    let mut out = DVector::zeros(n1);
    if n1 == 0 || t == 0.0 {
        return Ok(out);
    }
    for term in sig.terms() {
        out += convolve_term(j, term, t)?;
    }
    Ok(out)
}

fn convolve_term(j: &DMatrix<f64>, term: &ExpPolyTerm, t: f64) -> Result<DVector<f64>> {
    let n1 = j.nrows();
    let m = term.degree();
    let trig = term.kind != PhaseKind::None;
    // State z: φ_k(s) = e^{αs} s^k / k!, as (cos, sin) pairs for trig terms.
    let width = if trig { 2 } else { 1 };
    let size = width * (m + 1);

    // g = Σ k! v_k φ_k
    let mut v = DMatrix::zeros(n1, size);
    let mut factorial = 1.0;
    for k in 0..=m {
        if k > 0 {
            factorial *= k as f64;
        }
        let col = match term.kind {
            PhaseKind::None => k,
            PhaseKind::Cos => 2 * k,
            PhaseKind::Sin => 2 * k + 1,
        };
        v.set_column(col, &(&term.coeffs[k] * factorial));
    }
    // The result is linear in V; normalising keeps the augmented norm small.
    let v_scale = v.amax();
    if v_scale == 0.0 {
        return Ok(DVector::zeros(n1));
    }
    v /= v_scale;

    let mut s = DMatrix::zeros(size, size);
    for k in 0..=m {
        if trig {
            let (c, sn) = (2 * k, 2 * k + 1);
            s[(c, c)] = term.alpha;
            s[(sn, sn)] = term.alpha;
            s[(c, sn)] = -term.omega;
            s[(sn, c)] = term.omega;
            if k > 0 {
                s[(c, c - 2)] = 1.0;
                s[(sn, sn - 2)] = 1.0;
            }
        } else {
            s[(k, k)] = term.alpha;
            if k > 0 {
                s[(k, k - 1)] = 1.0;
            }
        }
    }

    let total = n1 + size;
    let mut aug = DMatrix::zeros(total, total);
    aug.view_mut((0, 0), (n1, n1)).copy_from(j);
    aug.view_mut((0, n1), (n1, size)).copy_from(&v);
    aug.view_mut((n1, n1), (size, size)).copy_from(&s);
    let e = matrix_exponential(&(aug * t))?;
    // z₀ = e₀: only φ₀ (its cos component for trig terms) is 1 at s = 0.
    Ok(e.view((0, n1), (n1, 1)).column(0).into_owned() * v_scale)
}

/// `J ∫₀ᵗ e^{(t-s)J} ds = e^{tJ} - I`, valid for singular `J` as well.
pub fn exp_action_integral(j: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let n = j.nrows();
    Ok(matrix_exponential(&(j * t))? - DMatrix::identity(n, n))
}
