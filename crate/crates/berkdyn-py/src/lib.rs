//! Python bindings. Exact values cross the boundary as strings (`"-1/3"`,
//! `"1*t^(-2) + 3"`, `"inf"`) so nothing is rounded on the way.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use berkdyn::berkovich::BerkPoint;
use berkdyn::boettcher::{phi_eval, rho_closeness};
use berkdyn::codec::{parse_backend, parse_scalar, polynomial_from_json, polynomial_to_json, raw_poly_from_json};
use berkdyn::conjugacy::{build_conjugacy, verify_extendable, ConjugacyOptions, ConjugacyOutcome};
use berkdyn::core_tree::{build_core_with, CoreOptions, CoreTree as RustCoreTree};
use berkdyn::escape::{classify_marks, julia_in_affine, EscapeOptions};
use berkdyn::hensel::lift as hensel_lift;
use berkdyn::polynomial::{marks_from, CriticalMark, MarkedPolynomial};
use berkdyn::valued_field::parse_rat;
use berkdyn::{Error, Val};

fn to_py(e: Error) -> PyErr {
    if e.is_exhaustion() {
        PyRuntimeError::new_err(format!("{}: {e}", e.code()))
    } else {
        PyValueError::new_err(format!("{}: {e}", e.code()))
    }
}

fn parse_json(text: &str) -> PyResult<serde_json::Value> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("invalid JSON: {e}")))
}

fn parse_val(s: &str) -> PyResult<Val> {
    Val::parse(s).map_err(to_py)
}

/// A monic centered polynomial with marked critical points.
#[pyclass(name = "Polynomial", module = "berkdyn", frozen)]
pub struct PyPolynomial {
    inner: MarkedPolynomial,
}

#[pymethods]
impl PyPolynomial {
    /// Build from critical data: backend such as `"padic:3"`, marks as
    /// `(point, multiplicity)` pairs, and the constant term `b`.
    #[new]
    fn new(backend: &str, marks: Vec<(String, u32)>, b: &str) -> PyResult<Self> {
        let be = parse_backend(backend).map_err(to_py)?;
        let mut data = Vec::new();
        let mut points = Vec::new();
        for (p, m) in &marks {
            points.push(parse_scalar(&be, p).map_err(to_py)?);
            data.push(*m);
        }
        let marks = points
            .into_iter()
            .zip(data)
            .map(|(p, m)| CriticalMark::new(p, m))
            .collect();
        let b = parse_scalar(&be, b).map_err(to_py)?;
        let inner = MarkedPolynomial::from_critical_data(marks, b).map_err(to_py)?;
        Ok(PyPolynomial { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = polynomial_from_json(&parse_json(text)?).map_err(to_py)?;
        Ok(PyPolynomial { inner })
    }

    fn to_json(&self) -> String {
        polynomial_to_json(&self.inner).to_string()
    }

    #[getter]
    fn degree(&self) -> u32 {
        self.inner.degree()
    }

    fn coefficients(&self) -> Vec<String> {
        self.inner.poly().coeffs().iter().map(|c| c.to_string()).collect()
    }

    fn base_radius_exp(&self) -> String {
        self.inner.base_radius_exp().to_string()
    }

    fn is_tame(&self) -> bool {
        self.inner.is_tame()
    }

    fn eval(&self, z: &str) -> PyResult<String> {
        let z = parse_scalar(self.inner.backend(), z).map_err(to_py)?;
        Ok(self.inner.eval(&z).to_string())
    }

    /// Image of the disk point `x[center; radius_exp]` with its degree.
    fn image_point(&self, center: &str, radius_exp: &str) -> PyResult<(String, String, u32)> {
        let x = self.point(center, radius_exp)?;
        let (y, deg) = self.inner.image_point(&x);
        Ok((y.center().to_string(), y.radius_exp().to_string(), deg))
    }

    /// Local degree from counting critical points in the disk.
    fn local_degree(&self, center: &str, radius_exp: &str) -> PyResult<u32> {
        let x = self.point(center, radius_exp)?;
        self.inner.local_degree_rh(&x).map_err(to_py)
    }

    #[pyo3(signature = (budget = 64))]
    fn classification(&self, budget: usize) -> PyResult<String> {
        Ok(julia_in_affine(&self.inner, budget).map_err(to_py)?.name().to_string())
    }

    #[pyo3(signature = (budget = 64))]
    fn escape_records(&self, budget: usize) -> PyResult<Vec<String>> {
        let recs = classify_marks(&self.inner, EscapeOptions { budget, ..EscapeOptions::default() }).map_err(to_py)?;
        Ok(recs.iter().map(|r| r.kind_name().to_string()).collect())
    }

    /// Böttcher coordinate at `z` to the given valuation precision.
    #[pyo3(signature = (z, precision = "20"))]
    fn phi(&self, z: &str, precision: &str) -> PyResult<String> {
        let z = parse_scalar(self.inner.backend(), z).map_err(to_py)?;
        let prec = parse_val(precision)?;
        Ok(phi_eval(&self.inner, &z, &prec).map_err(to_py)?.to_string())
    }

    fn __repr__(&self) -> String {
        format!("Polynomial({})", self.inner.poly())
    }
}

impl PyPolynomial {
    fn point(&self, center: &str, radius_exp: &str) -> PyResult<BerkPoint> {
        let c = parse_scalar(self.inner.backend(), center).map_err(to_py)?;
        Ok(BerkPoint::new(c, parse_val(radius_exp)?))
    }
}

/// A finite truncation of the trimmed dynamical core.
#[pyclass(name = "CoreTree", module = "berkdyn", frozen)]
pub struct PyCoreTree {
    inner: RustCoreTree,
}

#[pymethods]
impl PyCoreTree {
    #[new]
    #[pyo3(signature = (polynomial, rho = "inf", depth = 3, budget = 64))]
    fn new(polynomial: &PyPolynomial, rho: &str, depth: usize, budget: usize) -> PyResult<Self> {
        let opts = CoreOptions { rho: parse_val(rho)?, depth, budget, ..CoreOptions::default() };
        let inner = build_core_with(&polynomial.inner, &opts).map_err(to_py)?;
        Ok(PyCoreTree { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = RustCoreTree::from_json(&parse_json(text)?).map_err(to_py)?;
        Ok(PyCoreTree { inner })
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edges.len()
    }

    /// `(center, radius_exp, level)` for every vertex.
    fn vertices(&self) -> Vec<(String, String, usize)> {
        self.inner
            .vertex_ids()
            .map(|k| {
                let n = &self.inner.nodes[k];
                let p = n.point.as_ref().expect("vertices are points");
                (p.center().to_string(), p.radius_exp().to_string(), n.level.unwrap_or(0))
            })
            .collect()
    }

    /// `(degree, length)` for every edge.
    fn edges(&self) -> Vec<(u32, String)> {
        self.inner.edges.iter().map(|e| (e.degree, e.length.to_string())).collect()
    }

    fn to_dot(&self) -> String {
        self.inner.to_dot()
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn __eq__(&self, other: &PyCoreTree) -> bool {
        self.inner == other.inner
    }
}

/// ρ with which the Böttcher coordinates of `f` and `g` agree at their first exits.
#[pyfunction]
#[pyo3(signature = (f, g, precision = "20"))]
fn rho_closeness_exp(f: &PyPolynomial, g: &PyPolynomial, precision: &str) -> PyResult<String> {
    let b = rho_closeness(&f.inner, &g.inner, &parse_val(precision)?).map_err(to_py)?;
    Ok(b.rho_exp.to_string())
}

/// Build and verify the conjugacy between the cores of `f` and `g`. Returns
/// `(check, status)` pairs with status `"Pass"`, `"Fail"` or `"Skipped"`, or
/// the single pair `("well_defined", "Fail")` when the witness correspondence breaks.
#[pyfunction]
#[pyo3(signature = (f, g, rho, depth = 4, budget = 64, precision = "20"))]
fn compare(
    f: &PyPolynomial,
    g: &PyPolynomial,
    rho: &str,
    depth: usize,
    budget: usize,
    precision: &str,
) -> PyResult<Vec<(String, String)>> {
    let precision = parse_val(precision)?;
    let opts = ConjugacyOptions { rho: parse_val(rho)?, depth, budget, precision: precision.clone() };
    match build_conjugacy(&f.inner, &g.inner, &opts).map_err(to_py)? {
        ConjugacyOutcome::WellDefinednessFailure(_) => Ok(vec![("well_defined".into(), "Fail".into())]),
        ConjugacyOutcome::Built(h) => {
            let r = verify_extendable(&h, &precision);
            Ok(vec![
                ("isometry".into(), r.isometry.label().into()),
                ("equivariance".into(), r.equivariance.label().into()),
                ("local_translation".into(), r.local_translation.label().into()),
                ("boettcher_at_infinity".into(), r.boettcher_at_infinity.label().into()),
            ])
        }
    }
}

/// Newton lift for bare polynomials given as JSON `{"backend", "coeffs"}`.
/// Returns `(h(x), certified valuation, iterations)`.
#[pyfunction]
#[pyo3(signature = (f_json, g_json, at, target = "40"))]
fn lift(f_json: &str, g_json: &str, at: &str, target: &str) -> PyResult<(String, String, usize)> {
    let f = raw_poly_from_json(&parse_json(f_json)?).map_err(to_py)?;
    let g = raw_poly_from_json(&parse_json(g_json)?).map_err(to_py)?;
    let x = parse_scalar(f.backend(), at).map_err(to_py)?;
    let r = hensel_lift(&f, &g, &x, &parse_val(target)?, None).map_err(to_py)?;
    Ok((r.value.to_string(), r.certified_valuation.to_string(), r.iterations()))
}

/// Quadratic `z^2 + c` with its single mark at 0 (a convenience constructor).
#[pyfunction]
fn quadratic(backend: &str, c: &str) -> PyResult<PyPolynomial> {
    let be = parse_backend(backend).map_err(to_py)?;
    let c = parse_scalar(&be, c).map_err(to_py)?;
    let marks = marks_from(&be, &[(parse_rat("0").map_err(to_py)?, 2)]);
    let inner = MarkedPolynomial::from_critical_data(marks, c).map_err(to_py)?;
    Ok(PyPolynomial { inner })
}

#[pymodule]
#[pyo3(name = "berkdyn")]
fn berkdyn_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPolynomial>()?;
    m.add_class::<PyCoreTree>()?;
    m.add_function(wrap_pyfunction!(rho_closeness_exp, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(lift, m)?)?;
    m.add_function(wrap_pyfunction!(quadratic, m)?)?;
    Ok(())
}
