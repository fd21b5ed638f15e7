//! Report documents and their rendering. Exact entries are `"p/q"` strings,
//! float entries are numbers rounded to 12 significant digits, matrices are
//! row-major arrays of rows.

use std::fmt::Write as _;

use consensus_core::{Matrix, Scalar, Vector};
use serde::Serialize;
use serde_json::Value;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`]; `-0.0` becomes `0.0`.
pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("scientific notation parses back")
}

/// Text form used in CSV traces and human-readable output.
pub fn format_float(x: f64) -> String {
    round_significant(x).to_string()
}

pub fn float_value(x: f64) -> Value {
    serde_json::Number::from_f64(round_significant(x)).map_or(Value::Null, Value::Number)
}

pub fn scalar_value<T: Scalar>(v: &T) -> Value {
    if T::BACKEND.is_exact() {
        Value::String(v.to_string())
    } else {
        float_value(v.to_f64())
    }
}

pub fn vector_value<T: Scalar>(v: &Vector<T>) -> Vec<Value> {
    v.iter().map(scalar_value).collect()
}

pub fn matrix_value<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<Value>> {
    m.to_rows()
        .iter()
        .map(|row| row.iter().map(scalar_value).collect())
        .collect()
}

/// 1-based vertex lists.
pub fn vertex_sets<'a>(sets: impl IntoIterator<Item = &'a [usize]>) -> Vec<Vec<usize>> {
    sets.into_iter()
        .map(|s| s.iter().map(|v| v + 1).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Eigenvalue {
    pub re: Value,
    pub im: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixSet {
    pub backend: &'static str,
    pub laplacian: Vec<Vec<Value>>,
    pub eigenprojection: Vec<Vec<Value>>,
    pub s: Vec<Vec<Value>>,
    pub p_tilde: Vec<Vec<Value>>,
    pub l_tilde: Vec<Vec<Value>>,
    pub quasi_consensus: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolLimit {
    pub protocol: &'static str,
    pub limit: Vec<Value>,
    pub consensus: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub n: usize,
    pub backend: &'static str,
    pub components: Vec<Vec<usize>>,
    pub final_classes: Vec<Vec<usize>>,
    pub d: usize,
    pub has_spanning_in_tree: bool,
    pub tau_max: Value,
    pub tau: Value,
    pub eigenvalues: Vec<Eigenvalue>,
    pub eigenprojection: Vec<Vec<Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrices: Option<MatrixSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limits: Option<Vec<ProtocolLimit>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectReport {
    pub n: usize,
    pub backend: &'static str,
    pub tau: Value,
    pub s: Vec<Vec<Value>>,
    pub projected_x0: Vec<Value>,
    pub quasi_consensus: Value,
    pub in_consensus_domain: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub protocol: &'static str,
    pub backend: &'static str,
    pub n: usize,
    pub tau: Value,
    pub samples: usize,
    pub final_time: Value,
    pub converged: bool,
    pub limit: Vec<Value>,
    pub consensus: bool,
    pub consensus_tol: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cesaro_converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cesaro_final: Option<Vec<Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: &'static str,
    pub passed: bool,
    pub residual: Value,
    pub tolerance: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub n: usize,
    pub backend: &'static str,
    pub tau: Value,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<CheckEntry>,
}

pub fn to_json<R: Serialize>(report: &R) -> String {
    serde_json::to_string_pretty(report).expect("reports serialize")
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn row_text(row: &[Value]) -> String {
    row.iter().map(cell).collect::<Vec<_>>().join(" ")
}

fn sets_text(sets: &[Vec<usize>]) -> String {
    sets.iter()
        .map(|s| {
            let inner: Vec<String> = s.iter().map(usize::to_string).collect();
            format!("{{{}}}", inner.join(","))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn matrix_text(out: &mut String, title: &str, m: &[Vec<Value>]) {
    let _ = writeln!(out, "{title}:");
    for row in m {
        let _ = writeln!(out, "  {}", row_text(row));
    }
}

fn eigenvalue_text(e: &Eigenvalue) -> String {
    match e.im.as_f64() {
        Some(im) if im != 0.0 => {
            let sign = if im < 0.0 { '-' } else { '+' };
            format!("{}{sign}{}i", cell(&e.re), format_float(im.abs()))
        }
        _ => cell(&e.re),
    }
}

impl AnalyzeReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vertices: {} ({})", self.n, self.backend);
        let _ = writeln!(out, "components: {}", sets_text(&self.components));
        let _ = writeln!(out, "final classes: {}", sets_text(&self.final_classes));
        let _ = writeln!(out, "d: {}", self.d);
        let _ = writeln!(out, "spanning in-tree: {}", self.has_spanning_in_tree);
        let _ = writeln!(out, "tau_max: {}", cell(&self.tau_max));
        let _ = writeln!(out, "tau: {}", cell(&self.tau));
        let eig: Vec<String> = self.eigenvalues.iter().map(eigenvalue_text).collect();
        let _ = writeln!(out, "eigenvalues: {}", eig.join(", "));
        matrix_text(&mut out, "eigenprojection", &self.eigenprojection);
        if let Some(m) = &self.matrices {
            matrix_text(&mut out, "laplacian", &m.laplacian);
            matrix_text(&mut out, "s", &m.s);
            matrix_text(&mut out, "p_tilde", &m.p_tilde);
            matrix_text(&mut out, "l_tilde", &m.l_tilde);
            matrix_text(&mut out, "quasi_consensus", &m.quasi_consensus);
        }
        if let Some(limits) = &self.limits {
            let _ = writeln!(out, "limits:");
            for l in limits {
                let tag = if l.consensus {
                    "consensus"
                } else {
                    "no consensus"
                };
                let _ = writeln!(out, "  {:<12} {}  ({tag})", l.protocol, row_text(&l.limit));
            }
        }
        out
    }
}

impl ProjectReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vertices: {} ({})", self.n, self.backend);
        let _ = writeln!(out, "tau: {}", cell(&self.tau));
        matrix_text(&mut out, "s", &self.s);
        let _ = writeln!(out, "projected x0: {}", row_text(&self.projected_x0));
        let _ = writeln!(
            out,
            "quasi-consensus value: {}",
            cell(&self.quasi_consensus)
        );
        let _ = writeln!(out, "x0 in consensus domain: {}", self.in_consensus_domain);
        out
    }
}

impl VerifyReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            let _ = write!(
                out,
                "{status}  {:<44} residual {} (tol {})",
                c.name,
                cell(&c.residual),
                cell(&c.tolerance)
            );
            if let Some(note) = &c.note {
                let _ = write!(out, "  [{note}]");
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "verify ({}, tau = {}): {} passed, {} failed",
            self.backend,
            cell(&self.tau),
            self.passed,
            self.failed
        );
        out
    }
}
