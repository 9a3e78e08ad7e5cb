//! Python bindings. Reports come back as plain dicts and lists, shaped like the CLI's JSON.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyInt, PyList};
use serde::Serialize;
use num_bigint::BigInt;

use toroidal_core::fan::{DivisorSet, FanFile, SmoothFan};
use toroidal_core::germ::ThreePointGerm;
use toroidal_core::jacobian::{lambda_of, theorem391_classify};
use toroidal_core::lattice::{lattice_index as core_lattice_index, smith_normal_form as core_snf, ExpVec, IntMatrix};
use toroidal_core::principalize::{is_locally_principal, principalize, Strategy, DEFAULT_BUDGET};
use toroidal_core::rational::parse_q;
use toroidal_core::relations::{normalize3, resolve3, ThreePointPreRel};
use toroidal_core::suite::run_suite as core_run_suite;
use toroidal_core::tau::tau_report;

create_exception!(toroidal, ToroidalError, PyException);

fn err(e: toroidal_core::Error) -> PyErr {
    ToroidalError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(x).map_err(|e| ToroidalError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A map germ `(u, v, w)` in coordinates `(x, y, z)`.
#[pyclass(name = "Germ", module = "toroidal")]
struct PyGerm(toroidal_core::germ::Germ);

#[pymethods]
impl PyGerm {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        toroidal_core::germ::Germ::from_json(text).map(PyGerm).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn target_points(&self) -> usize {
        self.0.target_kind.count()
    }

    #[getter]
    fn domain_points(&self) -> usize {
        self.0.domain_kind.count()
    }

    /// Normal-form tag, e.g. `"Toroidal3"`.
    fn classify(&self) -> PyResult<String> {
        let tag = self.0.classify().map_err(err)?;
        Ok(serde_json::to_value(tag).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_else(|| format!("{tag:?}")))
    }

    fn validate(&self) -> Vec<String> {
        self.0.validate()
    }

    fn tau<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let g = ThreePointGerm::from_germ(&self.0).map_err(err)?;
        to_py(py, &tau_report(&g).map_err(err)?)
    }

    fn lambda_report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &lambda_of(&self.0).map_err(err)?)
    }

    /// Toroidal verdict from the `lambda` invariants.
    fn toroidality<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &theorem391_classify(&self.0).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("Germ({})", self.0.to_json())
    }
}

/// The pre-relation `w^c - lambda u^a v^b`.
#[pyclass(name = "PreRel3", module = "toroidal")]
struct PyPreRel3(ThreePointPreRel);

#[pymethods]
impl PyPreRel3 {
    #[new]
    #[pyo3(signature = (a, b, c, lam = "1"))]
    fn new(a: i64, b: i64, c: i64, lam: &str) -> PyResult<Self> {
        let lam = parse_q(lam).map_err(err)?;
        ThreePointPreRel::new(a, b, c, lam).map(PyPreRel3).map_err(err)
    }

    fn normalize<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &normalize3(&self.0).map_err(err)?)
    }

    /// Resolution tree and descent certificate.
    #[pyo3(signature = (budget = 200))]
    fn resolve<'py>(&self, py: Python<'py>, budget: usize) -> PyResult<Bound<'py, PyAny>> {
        let res = resolve3(&self.0, budget).map_err(err)?;
        to_py(
            py,
            &serde_json::json!({
                "all_leaves_closed": res.all_leaves_closed(),
                "depth": res.tree.depth(),
                "certificate": res.certificate,
                "tree": res.tree,
            }),
        )
    }

    fn __repr__(&self) -> String {
        let [a, b, c] = self.0.exps();
        format!("PreRel3(a={a}, b={b}, c={c}, lam={})", toroidal_core::rational::fmt_q(&self.0.lambda))
    }
}

/// A smooth fan refining the octant together with its divisors.
#[pyclass(name = "Fan", module = "toroidal")]
struct PyFan {
    fan: SmoothFan,
    divisors: DivisorSet,
}

#[pymethods]
impl PyFan {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (fan, divisors) = FanFile::from_json(text).map_err(err)?;
        Ok(PyFan { fan, divisors })
    }

    fn to_json(&self) -> String {
        FanFile::new(&self.fan, &self.divisors).to_json()
    }

    #[getter]
    fn num_rays(&self) -> usize {
        self.fan.rays.len()
    }

    #[getter]
    fn num_cones(&self) -> usize {
        self.fan.cones.len()
    }

    fn is_locally_principal(&self) -> bool {
        is_locally_principal(&self.fan, &self.divisors)
    }

    /// Returns the subdivided fan and the round history.
    #[pyo3(signature = (strategy = "pair", budget = DEFAULT_BUDGET))]
    fn principalize<'py>(&self, py: Python<'py>, strategy: &str, budget: usize) -> PyResult<(PyFan, Bound<'py, PyAny>)> {
        let strategy: Strategy = strategy.parse().map_err(err)?;
        let p = principalize(&self.fan, &self.divisors, strategy, budget).map_err(err)?;
        let history = to_py(py, &p.history)?;
        Ok((PyFan { fan: p.fan, divisors: p.divisors }, history))
    }
}

fn big_to_py<'py>(py: Python<'py>, n: &BigInt) -> PyResult<Bound<'py, PyAny>> {
    py.get_type::<PyInt>().call1((n.to_string(),))
}

fn exp_vecs(rows: Vec<Vec<i64>>) -> Vec<ExpVec> {
    rows.into_iter().map(ExpVec::new).collect()
}

/// Smith invariants of an integer matrix.
#[pyfunction]
fn smith_normal_form<'py>(py: Python<'py>, rows: Vec<Vec<i64>>) -> PyResult<Bound<'py, PyAny>> {
    let m: IntMatrix = rows.into_iter().map(|r| r.into_iter().map(Into::into).collect()).collect();
    let d: Vec<Bound<'py, PyAny>> = core_snf(&m).diagonal().iter().map(|n| big_to_py(py, n)).collect::<PyResult<_>>()?;
    Ok(PyList::new(py, d)?.into_any())
}

/// `|<h> / <a>|`, or `None` when the quotient is infinite.
#[pyfunction]
fn lattice_index<'py>(py: Python<'py>, h: Vec<Vec<i64>>, a: Vec<Vec<i64>>) -> PyResult<Bound<'py, PyAny>> {
    let idx = core_lattice_index(&exp_vecs(h), &exp_vecs(a)).map_err(err)?;
    match idx {
        toroidal_core::lattice::LatticeIndex::Finite(n) => big_to_py(py, &n),
        toroidal_core::lattice::LatticeIndex::Infinite => Ok(py.None().into_bound(py)),
    }
}

/// The seeded acceptance suites; `only` restricts to the named criteria.
#[pyfunction]
#[pyo3(signature = (seed, only = None))]
fn run_suite<'py>(py: Python<'py>, seed: u64, only: Option<Vec<String>>) -> PyResult<Bound<'py, PyAny>> {
    let names: Option<Vec<&str>> = only.as_ref().map(|o| o.iter().map(String::as_str).collect());
    let report = py.detach(|| core_run_suite(seed, names.as_deref()));
    to_py(py, &report)
}

#[pymodule]
fn toroidal(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ToroidalError", m.py().get_type::<ToroidalError>())?;
    m.add_class::<PyGerm>()?;
    m.add_class::<PyPreRel3>()?;
    m.add_class::<PyFan>()?;
    m.add_function(wrap_pyfunction!(smith_normal_form, m)?)?;
    m.add_function(wrap_pyfunction!(lattice_index, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
