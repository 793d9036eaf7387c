//! Solution samples as CSV: header `t,x_1,...,x_n,res_eq`, one row per
//! Chebyshev point, 17 significant digits, `.` decimals, LF line endings.

use std::fmt::Write as _;
use std::path::Path;

use daebvp_core::{chebyshev_grid, BvpProblem, Trajectory};
use serde::Serialize;

use crate::problem::InputError;

fn number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn header(n: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=n {
        write!(h, ",x_{i}").expect("writing to a String");
    }
    h.push_str(",res_eq");
    h
}

pub fn write<S: Trajectory + ?Sized>(prob: &BvpProblem, sol: &S, points: usize) -> String {
    let e = prob.pencil().e();
    let a = prob.pencil().a();
    let mut out = header(prob.dim());
    out.push('\n');
    for t in chebyshev_grid(prob.horizon(), points) {
        let x = sol.state(t);
        let residual = (e * sol.derivative(t) - a * &x - prob.forcing().evaluate(t)).norm();
        out.push_str(&number(t));
        for v in x.iter() {
            out.push(',');
            out.push_str(&number(*v));
        }
        out.push(',');
        out.push_str(&number(residual));
        out.push('\n');
    }
    out
}

/// Agreement between a CSV file and a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: usize,
    /// `max ‖x_csv(t) - x(t)‖_∞ / (1 + ‖x(t)‖_∞)`
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn csv_error(line: usize, message: impl Into<String>) -> InputError {
    InputError::Parse { line, column: 1, message: message.into() }
}

pub fn compare<S: Trajectory + ?Sized>(text: &str, sol: &S, tolerance: f64) -> Result<Comparison, InputError> {
    let n = sol.dim();
    let mut lines = text.lines().enumerate();
    let expected = header(n);
    match lines.next() {
        Some((_, h)) if h.trim_end() == expected => {}
        Some((_, h)) => return Err(csv_error(1, format!("expected header `{expected}`, found `{h}`"))),
        None => return Err(csv_error(1, "empty file")),
    }
    let mut rows = 0;
    let mut max_deviation: f64 = 0.0;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| csv_error(line_no, format!("bad number: {e}")))?;
        if values.len() != n + 2 {
            return Err(csv_error(line_no, format!("expected {} columns, found {}", n + 2, values.len())));
        }
        let x = sol.state(values[0]);
        let deviation = x
            .iter()
            .zip(&values[1..=n])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / (1.0 + x.amax());
        max_deviation = max_deviation.max(deviation);
        rows += 1;
    }
    if rows == 0 {
        return Err(csv_error(2, "no samples"));
    }
    // NaN deviations must fail.
    let passed = max_deviation <= tolerance;
    Ok(Comparison { rows, max_deviation, tolerance, passed })
}

pub fn compare_file<S: Trajectory + ?Sized>(path: &Path, sol: &S, tolerance: f64) -> Result<Comparison, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError::Io(format!("{}: {e}", path.display())))?;
    compare(&text, sol, tolerance)
}
