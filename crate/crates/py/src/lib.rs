//! Python bindings for the expansion library.
//!
//! Rationals cross the boundary as `p/q` strings, expansions as an
//! `Expansion` class with plain int digits, reports as small classes.
//!
//!     import altsyl_py as alt
//!     e = alt.expand("5/7", "const:1")
//!     assert e.terms == [1, 3, 21]
//!     assert alt.reconstruct("0;1,3,21", "const:1") == "5/7"

use num::bigint::BigInt;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use altsyl::canon;
use altsyl::cseq::CSeq;
use altsyl::expansion::{Expansion as CoreExpansion, TermView, DEFAULT_MAX_TERMS};
use altsyl::irrational::{self, GrowthSeq};
use altsyl::rational::Rational;
use altsyl::realfield::{DigitsOutcome, Real, DEFAULT_DIGIT_COUNT, DEFAULT_ROUNDS};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn cseq_of(text: &str) -> PyResult<CSeq> {
    CSeq::parse(text).map_err(value_err)
}

fn literal_of(text: &str, cseq: &CSeq) -> PyResult<CoreExpansion> {
    CoreExpansion::parse_literal(text, cseq).map_err(value_err)
}

/// A digit expansion: integer part, digit list, termination flag, and the
/// multiplier-sequence rule it lives under.
#[pyclass(frozen)]
struct Expansion {
    #[pyo3(get)]
    q0: BigInt,
    #[pyo3(get)]
    terms: Vec<BigInt>,
    #[pyo3(get)]
    terminated: bool,
    #[pyo3(get)]
    cseq: String,
}

#[pymethods]
impl Expansion {
    /// Literal form `q0;a1,a2,...` (with `;...` when not terminated).
    fn literal(&self) -> String {
        let mut out = self.q0.to_string();
        if !self.terms.is_empty() {
            out.push(';');
            let digits: Vec<String> = self.terms.iter().map(|d| d.to_string()).collect();
            out.push_str(&digits.join(","));
        }
        if !self.terminated {
            out.push_str(";...");
        }
        out
    }

    fn __repr__(&self) -> String {
        format!("Expansion({})", self.literal())
    }
}

impl Expansion {
    fn from_core(e: &CoreExpansion) -> Expansion {
        let mut terms = Vec::new();
        let mut n = 1;
        while let TermView::Digit(d) = e.term(n) {
            terms.push(BigInt::from(d));
            n += 1;
        }
        Expansion {
            q0: e.q0().clone(),
            terms,
            terminated: e.is_terminated(),
            cseq: e.cseq().to_string(),
        }
    }
}

/// Canonical-sequence check result.
#[pyclass(frozen)]
struct TReport {
    #[pyo3(get)]
    valid: bool,
    #[pyo3(get)]
    violated: Option<String>,
    #[pyo3(get)]
    index: Option<usize>,
    #[pyo3(get)]
    checked_upto: usize,
}

#[pymethods]
impl TReport {
    fn __repr__(&self) -> String {
        match &self.violated {
            Some(code) => format!(
                "TReport(invalid {} at {})",
                code,
                self.index.unwrap_or(0)
            ),
            None => format!("TReport(valid, checked {})", self.checked_upto),
        }
    }
}

/// Expand a rational `p/q` under a multiplier-sequence rule.
#[pyfunction]
#[pyo3(signature = (alpha, cseq, max_terms = DEFAULT_MAX_TERMS))]
fn expand(alpha: &str, cseq: &str, max_terms: usize) -> PyResult<Expansion> {
    let cs = cseq_of(cseq)?;
    let a: Rational = alpha.parse().map_err(value_err)?;
    let e = CoreExpansion::expand(&a, &cs, max_terms).map_err(runtime_err)?;
    Ok(Expansion::from_core(&e))
}

/// Exact value of an expansion literal as a `p/q` string.
#[pyfunction]
#[pyo3(signature = (x, cseq, upto = None))]
fn reconstruct(x: &str, cseq: &str, upto: Option<usize>) -> PyResult<String> {
    let cs = cseq_of(cseq)?;
    let e = literal_of(x, &cs)?;
    let horizon = upto.unwrap_or_else(|| e.known_len().unwrap_or(0));
    Ok(e.reconstruct(horizon).map_err(runtime_err)?.to_string())
}

/// Check the canonical-sequence conditions of a literal.
#[pyfunction]
#[pyo3(signature = (x, cseq, upto = 64))]
fn validate(x: &str, cseq: &str, upto: usize) -> PyResult<TReport> {
    let cs = cseq_of(cseq)?;
    let e = literal_of(x, &cs)?;
    match canon::check_t(&e, upto) {
        Ok(report) => Ok(TReport {
            valid: report.valid,
            violated: report.violated.map(|v| v.code().to_string()),
            index: report.index,
            checked_upto: report.checked_upto,
        }),
        Err(canon::CanonError::Cseq(altsyl::cseq::CseqError::DivisorChainViolation {
            index,
        })) => Ok(TReport {
            valid: false,
            violated: Some("chain".to_string()),
            index: Some(index),
            checked_upto: 0,
        }),
        Err(e) => Err(runtime_err(e)),
    }
}

/// Compare two literals: "less" | "equal" | "greater" | "undecided".
#[pyfunction]
#[pyo3(signature = (x, y, cseq, budget = DEFAULT_ROUNDS))]
fn compare(x: &str, y: &str, cseq: &str, budget: usize) -> PyResult<String> {
    let cs = cseq_of(cseq)?;
    let ex = literal_of(x, &cs)?;
    let ey = literal_of(y, &cs)?;
    let outcome = canon::compare(&ex, &ey, budget).map_err(value_err)?;
    Ok(outcome.as_str().to_string())
}

/// Field operation over exact literals; returns (value, expansion).
#[pyfunction]
#[pyo3(signature = (op, x, cseq, y = None))]
fn arith(op: &str, x: &str, cseq: &str, y: Option<&str>) -> PyResult<(String, Expansion)> {
    let cs = cseq_of(cseq)?;
    let exact = |text: &str| -> PyResult<Real> {
        let e = literal_of(text, &cs)?;
        let v = e
            .value()
            .map_err(runtime_err)?
            .ok_or_else(|| value_err("operation needs an exact (terminated) literal"))?;
        Ok(Real::exact(v, &cs))
    };
    let rx = exact(x)?;
    let result = match op {
        "add" | "mul" => {
            let y = y.ok_or_else(|| value_err("this op needs y"))?;
            let ry = exact(y)?;
            if op == "add" {
                rx.add(&ry).map_err(value_err)?
            } else {
                rx.mul(&ry).map_err(value_err)?
            }
        }
        "neg" => rx.neg(),
        "inv" => rx.inv().map_err(value_err)?,
        other => return Err(value_err(format!("unknown op: {other}"))),
    };
    let value = result.as_exact().expect("exact collapse").to_string();
    let expansion = result.expansion().map_err(runtime_err)?;
    Ok((value, Expansion::from_core(&expansion)))
}

/// Re-derive digits of a literal from bracketing enclosures. Raises
/// `RuntimeError` when a digit stays undecided within the budget.
#[pyfunction]
#[pyo3(signature = (x, cseq, count = DEFAULT_DIGIT_COUNT, budget = DEFAULT_ROUNDS))]
fn digits(x: &str, cseq: &str, count: usize, budget: usize) -> PyResult<Expansion> {
    let cs = cseq_of(cseq)?;
    let real = Real::stream(literal_of(x, &cs)?).map_err(value_err)?;
    match real.digits(count, budget).map_err(runtime_err)? {
        DigitsOutcome::Decided(e) => Ok(Expansion::from_core(&e)),
        DigitsOutcome::Undecided { at } => Err(runtime_err(format!("undecided at digit {at}"))),
    }
}

/// Refine an exact rational enclosure of a literal's value; returns
/// (lower, upper, terms_used).
#[pyfunction]
#[pyo3(signature = (x, cseq, precision = None, budget = DEFAULT_ROUNDS))]
fn enclose(
    x: &str,
    cseq: &str,
    precision: Option<&str>,
    budget: usize,
) -> PyResult<(String, String, usize)> {
    let cs = cseq_of(cseq)?;
    let real = Real::stream(literal_of(x, &cs)?).map_err(value_err)?;
    let p = match precision {
        Some(text) => text.parse::<Rational>().map_err(value_err)?,
        None => altsyl::realfield::default_precision(),
    };
    if !p.is_positive() {
        return Err(value_err("precision must be positive"));
    }
    let enc = real.enclose(&p, budget).map_err(runtime_err)?;
    Ok((
        enc.lower.to_string(),
        enc.upper.to_string(),
        enc.terms_used,
    ))
}

/// Digitwise supremum (or infimum) of literals; returns the winner literal.
#[pyfunction]
#[pyo3(signature = (xs, cseq, budget = DEFAULT_ROUNDS, inf = false))]
fn sup(xs: Vec<String>, cseq: &str, budget: usize, inf: bool) -> PyResult<String> {
    let cs = cseq_of(cseq)?;
    let mut members = Vec::new();
    for lit in &xs {
        members.push(Real::stream(literal_of(lit, &cs)?).map_err(value_err)?);
    }
    let winner = if inf {
        Real::inf_finite(&members, budget).map_err(value_err)?
    } else {
        Real::sup_finite(&members, budget).map_err(value_err)?
    };
    let e = winner.expansion().map_err(runtime_err)?;
    Ok(e.literal_string())
}

/// Irrationality certificate for f(-l) over a named growth sequence, as a
/// JSON string.
#[pyfunction]
#[pyo3(signature = (l, seq, prefix = 10))]
fn certify(l: u64, seq: &str, prefix: usize) -> PyResult<String> {
    let growth = GrowthSeq::parse(seq).map_err(value_err)?;
    let cert = irrational::certify(&growth, l, prefix).map_err(value_err)?;
    Ok(cert.to_json().to_string())
}

/// Re-validate a certificate against its sequence over `terms` tail digits.
#[pyfunction]
#[pyo3(signature = (l, seq, prefix, terms))]
fn crosscheck(l: u64, seq: &str, prefix: usize, terms: usize) -> PyResult<bool> {
    let growth = GrowthSeq::parse(seq).map_err(value_err)?;
    let cert = irrational::certify(&growth, l, prefix).map_err(value_err)?;
    Ok(irrational::crosscheck(&cert, &growth, terms)
        .map_err(runtime_err)?
        .is_consistent())
}

/// Exact partial sum of f(z) = sum z^n / p_n as a `p/q` string.
#[pyfunction]
#[pyo3(signature = (seq, z, terms = 3))]
fn eval_series(seq: &str, z: i64, terms: usize) -> PyResult<String> {
    let growth = GrowthSeq::parse(seq).map_err(value_err)?;
    Ok(irrational::eval_f(&growth, &z.into(), terms)
        .map_err(runtime_err)?
        .to_string())
}

#[pymodule]
fn altsyl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Expansion>()?;
    m.add_class::<TReport>()?;
    m.add_function(wrap_pyfunction!(expand, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(arith, m)?)?;
    m.add_function(wrap_pyfunction!(digits, m)?)?;
    m.add_function(wrap_pyfunction!(enclose, m)?)?;
    m.add_function(wrap_pyfunction!(sup, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(crosscheck, m)?)?;
    m.add_function(wrap_pyfunction!(eval_series, m)?)?;
    Ok(())
}
