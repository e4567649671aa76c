//! Text and JSON encodings of scalars, backends and marked polynomials.
//!
//! Scalars are written as strings: a rational literal such as `"-1/3"` for the
//! p-adic backend, and a sum of terms `"c*t^(e) + ..."` for series. Every
//! exponent and valuation is an exact rational string; `"inf"` stands for an
//! infinite valuation.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::polynomial::{CriticalMark, MarkedPolynomial, Poly};
use crate::valued_field::{int, parse_rat, Backend, Rat, Scalar, Val};

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

/// Split at top-level `+` signs (parentheses protect exponents).
fn split_terms(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur.trim().to_string());
    out
}

fn parse_series_term(term: &str) -> Result<(Rat, Rat)> {
    let term = term.replace(' ', "");
    let Some(tpos) = term.find('t') else {
        return Ok((int(0), parse_rat(&term)?));
    };
    let (coeff_part, rest) = term.split_at(tpos);
    let coeff = match coeff_part.trim_end_matches('*') {
        "" => int(1),
        "-" => int(-1),
        c => parse_rat(c)?,
    };
    let rest = &rest[1..];
    let exp = if rest.is_empty() {
        int(1)
    } else if let Some(e) = rest.strip_prefix('^') {
        parse_rat(e.trim_start_matches('(').trim_end_matches(')'))?
    } else {
        return Err(bad(format!("malformed series term {term:?}")));
    };
    Ok((exp, coeff))
}

pub fn parse_scalar(backend: &Backend, s: &str) -> Result<Scalar> {
    match backend {
        Backend::PAdic { .. } => Ok(backend.rational(parse_rat(s)?)),
        Backend::SeriesT { .. } => {
            let mut pairs = Vec::new();
            for term in split_terms(s) {
                if term.is_empty() {
                    return Err(bad(format!("empty term in series literal {s:?}")));
                }
                pairs.push(parse_series_term(&term)?);
            }
            backend.series_from_terms(&pairs)
        }
    }
}

pub fn scalar_to_json(x: &Scalar) -> Value {
    Value::String(x.to_string())
}

pub fn scalar_from_json(backend: &Backend, v: &Value) -> Result<Scalar> {
    match v {
        Value::String(s) => parse_scalar(backend, s),
        Value::Number(n) if n.is_i64() => Ok(backend.int(n.as_i64().unwrap())),
        other => Err(bad(format!("expected a scalar string, found {other}"))),
    }
}

pub fn val_to_json(v: &Val) -> Value {
    Value::String(v.to_string())
}

pub fn val_from_json(v: &Value) -> Result<Val> {
    match v {
        Value::String(s) => Val::parse(s),
        Value::Number(n) if n.is_i64() => Ok(Val::from_int(n.as_i64().unwrap())),
        other => Err(bad(format!("expected a valuation string, found {other}"))),
    }
}

pub fn rat_to_json(q: &Rat) -> Value {
    Value::String(q.to_string())
}

/// Backend descriptor: `"padic:3"`, `"series:12"` or `"series:12:2"`
/// (cutoff exponent, then ramification denominator).
pub fn parse_backend(s: &str) -> Result<Backend> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    match parts.as_slice() {
        ["padic", p] => {
            let p: u64 = p.parse().map_err(|_| bad(format!("bad prime in {s:?}")))?;
            Backend::padic(p)
        }
        ["series", prec] => Backend::series(parse_rat(prec)?, 1),
        ["series", prec, ram] => {
            let ram: u64 = ram.parse().map_err(|_| bad(format!("bad ramification in {s:?}")))?;
            Backend::series(parse_rat(prec)?, ram)
        }
        _ => Err(Error::InvalidBackend(format!("unrecognised backend {s:?}"))),
    }
}

pub fn backend_to_string(b: &Backend) -> String {
    match b {
        Backend::PAdic { p } => format!("padic:{p}"),
        Backend::SeriesT { precision, ramification } => {
            if *ramification == 1 {
                format!("series:{precision}")
            } else {
                format!("series:{precision}:{ramification}")
            }
        }
    }
}

fn field<'a>(obj: &'a Value, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| bad(format!("missing field {key:?}")))
}

pub fn marks_to_json(marks: &[CriticalMark]) -> Value {
    Value::Array(
        marks
            .iter()
            .map(|m| json!({"point": scalar_to_json(&m.point), "multiplicity": m.multiplicity}))
            .collect(),
    )
}

pub fn marks_from_json(backend: &Backend, v: &Value) -> Result<Vec<CriticalMark>> {
    let arr = v.as_array().ok_or_else(|| bad("marks must be an array"))?;
    arr.iter()
        .map(|m| {
            let point = scalar_from_json(backend, field(m, "point")?)?;
            let mult = field(m, "multiplicity")?
                .as_u64()
                .ok_or_else(|| bad("multiplicity must be a positive integer"))?;
            Ok(CriticalMark::new(point, mult as u32))
        })
        .collect()
}

pub fn polynomial_to_json(f: &MarkedPolynomial) -> Value {
    json!({
        "backend": backend_to_string(f.backend()),
        "coeffs": f.poly().coeffs().iter().map(scalar_to_json).collect::<Vec<_>>(),
        "marks": marks_to_json(f.marks()),
    })
}

/// Read a polynomial description. Either `coeffs` (low to high, with
/// `marks`) or the critical data `marks` plus the constant term `b`.
pub fn polynomial_from_json(v: &Value) -> Result<MarkedPolynomial> {
    let backend = parse_backend(
        field(v, "backend")?.as_str().ok_or_else(|| bad("backend must be a string"))?,
    )?;
    let marks = marks_from_json(&backend, field(v, "marks")?)?;
    if let Some(coeffs) = v.get("coeffs") {
        let coeffs = coeffs
            .as_array()
            .ok_or_else(|| bad("coeffs must be an array"))?
            .iter()
            .map(|c| scalar_from_json(&backend, c))
            .collect::<Result<Vec<_>>>()?;
        MarkedPolynomial::from_coeffs(coeffs, marks)
    } else {
        let b = scalar_from_json(&backend, field(v, "b")?)?;
        MarkedPolynomial::from_critical_data(marks, b)
    }
}

/// A bare polynomial `{"backend", "coeffs"}` (low to high); marks are ignored.
pub fn raw_poly_from_json(v: &Value) -> Result<Poly> {
    let backend = parse_backend(
        field(v, "backend")?.as_str().ok_or_else(|| bad("backend must be a string"))?,
    )?;
    let coeffs = field(v, "coeffs")?
        .as_array()
        .ok_or_else(|| bad("coeffs must be an array"))?
        .iter()
        .map(|c| scalar_from_json(&backend, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(Poly::new(&backend, coeffs))
}
