//! The JSON problem format.

use std::fmt;
use std::path::Path;

use daebvp_core::{BvpProblem, ExpPolySignal, ExpPolyTerm, Pencil, PhaseKind};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Bvp,
    Ivp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default = "default_kind")]
    pub kind: PhaseKind,
    pub poly: Vec<Vec<f64>>,
}

fn default_kind() -> PhaseKind {
    PhaseKind::None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: String,
    #[serde(default)]
    pub mode: Mode,
    #[serde(rename = "E")]
    pub e: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
    pub d: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub f: Vec<TermSpec>,
}

/// Malformed input, located by line (parse errors) or by field.
#[derive(Debug, Clone, PartialEq)]
pub enum InputError {
    Io(String),
    Parse { line: usize, column: usize, message: String },
    Field { field: String, message: String },
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputError::Io(msg) => write!(f, "{msg}"),
            InputError::Parse { line, column, message } => write!(f, "line {line}, column {column}: {message}"),
            InputError::Field { field, message } => write!(f, "field `{field}`: {message}"),
        }
    }
}

fn field(name: impl Into<String>, message: impl Into<String>) -> InputError {
    InputError::Field { field: name.into(), message: message.into() }
}

/// A validated problem file.
#[derive(Debug, Clone)]
pub enum Problem {
    Bvp(BvpProblem),
    Ivp {
        pencil: Pencil,
        x0: DVector<f64>,
        horizon: f64,
        forcing: ExpPolySignal,
    },
}

impl Problem {
    pub fn pencil(&self) -> &Pencil {
        match self {
            Problem::Bvp(p) => p.pencil(),
            Problem::Ivp { pencil, .. } => pencil,
        }
    }

    pub fn dim(&self) -> usize {
        self.pencil().dim()
    }

    /// The problem as a boundary value problem; an initial value problem
    /// becomes `I·x(0) + 0·x(T) = x₀`.
    pub fn as_bvp(&self) -> BvpProblem {
        match self {
            Problem::Bvp(p) => p.clone(),
            Problem::Ivp { pencil, x0, horizon, forcing } => {
                let n = pencil.dim();
                BvpProblem::new(pencil.clone(), DMatrix::identity(n, n), DMatrix::zeros(n, n), x0.clone(), *horizon, forcing.clone())
                    .expect("validated dimensions")
            }
        }
    }
}

pub fn load(path: &Path) -> Result<Problem, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Problem, InputError> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| InputError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.validate()
}

fn matrix(name: &str, rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>, InputError> {
    if rows.len() != n {
        return Err(field(name, format!("expected {n} rows, found {}", rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(field(format!("{name}[{i}]"), format!("expected {n} entries, found {}", row.len())));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(field(format!("{name}[{i}][{j}]"), "not a finite number"));
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector(name: &str, values: &[f64], n: usize) -> Result<DVector<f64>, InputError> {
    if values.len() != n {
        return Err(field(name, format!("expected {n} entries, found {}", values.len())));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(field(format!("{name}[{i}]"), "not a finite number"));
    }
    Ok(DVector::from_column_slice(values))
}

impl ProblemFile {
    pub fn validate(&self) -> Result<Problem, InputError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field(
                "schema_version",
                format!("unsupported version {:?}, expected {SCHEMA_VERSION:?}", self.schema_version),
            ));
        }
        let n = self.e.len();
        if n == 0 {
            return Err(field("E", "empty matrix"));
        }
        let e = matrix("E", &self.e, n)?;
        let a = matrix("A", &self.a, n)?;
        let d = vector("d", &self.d, n)?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(field("T", format!("must be positive and finite, found {}", self.horizon)));
        }
        let mut terms = Vec::with_capacity(self.f.len());
        for (k, spec) in self.f.iter().enumerate() {
            if spec.poly.is_empty() {
                return Err(field(format!("f[{k}].poly"), "needs at least one coefficient vector"));
            }
            let coeffs = spec
                .poly
                .iter()
                .enumerate()
                .map(|(i, v)| vector(&format!("f[{k}].poly[{i}]"), v, n))
                .collect::<Result<Vec<_>, _>>()?;
            let term = ExpPolyTerm::new(spec.alpha, spec.omega, spec.kind, coeffs)
                .map_err(|err| field(format!("f[{k}]"), err.to_string()))?;
            terms.push(term);
        }
        let forcing = ExpPolySignal::new(n, terms).map_err(|err| field("f", err.to_string()))?;
        let pencil = Pencil::new(e, a).map_err(|err| field("E", err.to_string()))?;

        match self.mode {
            Mode::Bvp => {
                let b = matrix("B", self.b.as_deref().ok_or_else(|| field("B", "required in bvp mode"))?, n)?;
                let c = matrix("C", self.c.as_deref().ok_or_else(|| field("C", "required in bvp mode"))?, n)?;
                let prob = BvpProblem::new(pencil, b, c, d, self.horizon, forcing).map_err(|err| field("problem", err.to_string()))?;
                Ok(Problem::Bvp(prob))
            }
            Mode::Ivp => Ok(Problem::Ivp { pencil, x0: d, horizon: self.horizon, forcing }),
        }
    }
}
