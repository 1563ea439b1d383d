//! Python bindings: built-in and tabulated problems, index computations,
//! sweeps, branch traces and the closed-form example oracles.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use maslov_core::examples::{self, AnalyticValue, ExampleId};
use maslov_core::linalg::SymMatrix;
use maslov_core::problem::load_tabulated_path;
use maslov_core::tracker::{Evolution, TrackerConfig};
use maslov_core::{IntegratorConfig, MaslovError, Method};

create_exception!(
    maslov,
    NumericalError,
    PyException,
    "A classified numerical failure; `kind` is in the message prefix."
);

fn to_py(e: MaslovError) -> PyErr {
    match e {
        MaslovError::InvalidInput(_) | MaslovError::Parse { .. } | MaslovError::Io(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => NumericalError::new_err(format!("{}: {other}", other.kind())),
    }
}

/// Builds an integrator configuration from keyword values.
pub fn integrator(
    method: &str,
    step: f64,
    tol: f64,
    half_width: f64,
) -> Result<IntegratorConfig, MaslovError> {
    let cfg = IntegratorConfig {
        method: method.parse::<Method>()?,
        step,
        tol,
        half_width,
        ..IntegratorConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// `(lam, index, crossing_count, status)`.
type SweepRow = (f64, Option<i32>, Option<usize>, String);
/// `(x, det_x, mu, nu)`.
type TraceRow = (f64, f64, Vec<Option<f64>>, Vec<f64>);

/// A Schrödinger-type problem `u'' + V(x) u = λ u`.
#[pyclass(frozen, module = "maslov")]
struct Problem {
    inner: maslov_core::Problem,
}

#[pymethods]
impl Problem {
    /// `V = −1 + 3 sech²(x/2)`.
    #[staticmethod]
    fn example1() -> Self {
        Problem {
            inner: examples::example1_problem(),
        }
    }

    /// Decoupled two-channel problem with coupling `c`.
    #[staticmethod]
    #[pyo3(signature = (c = -1.0))]
    fn example2(c: f64) -> Self {
        Problem {
            inner: examples::example2_problem(c),
        }
    }

    /// Two channels coupled through `eps · sech x`.
    #[staticmethod]
    #[pyo3(signature = (eps = 0.8))]
    fn coupled(eps: f64) -> Self {
        Problem {
            inner: examples::coupled_problem(eps),
        }
    }

    /// Constant potential `V ≡ −1`.
    #[staticmethod]
    fn free() -> Self {
        Problem {
            inner: maslov_core::Problem::constant("free", SymMatrix::from_diag(&[-1.0])),
        }
    }

    /// Tabulated potential from a CSV file with header `x,v11,v12,...,vnn`.
    #[staticmethod]
    fn from_csv(path: &str) -> PyResult<Self> {
        let table = load_tabulated_path(path).map_err(to_py)?;
        let inner = maslov_core::Problem::from_tabulated(path, table).map_err(to_py)?;
        Ok(Problem { inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// `V(x)` as a nested list.
    fn potential(&self, x: f64) -> Vec<Vec<f64>> {
        let v = self.inner.potential(x);
        (0..v.n())
            .map(|i| (0..v.n()).map(|j| v.get(i, j)).collect())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Problem({:?}, n={})", self.inner.name(), self.inner.n())
    }
}

/// One classified crossing.
#[pyclass(frozen, get_all, module = "maslov")]
struct Crossing {
    x0: f64,
    k: usize,
    signature: i32,
    branch_signs: Vec<i32>,
    left_limits: Vec<i32>,
    right_limits: Vec<i32>,
    crossing_form_signature: i32,
    residues: Vec<(f64, f64)>,
}

#[pymethods]
impl Crossing {
    fn __repr__(&self) -> String {
        format!(
            "Crossing(x0={}, k={}, signature={})",
            self.x0, self.k, self.signature
        )
    }
}

#[pyclass(frozen, module = "maslov")]
struct MaslovResult {
    #[pyo3(get, name = "lambda_")]
    lambda: f64,
    #[pyo3(get)]
    index: i32,
    crossings: Vec<Py<Crossing>>,
    diagnostics: maslov_core::Diagnostics,
}

#[pymethods]
impl MaslovResult {
    #[getter]
    fn crossings(&self, py: Python<'_>) -> Vec<Py<Crossing>> {
        self.crossings.iter().map(|c| c.clone_ref(py)).collect()
    }

    #[getter]
    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = &self.diagnostics;
        let out = PyDict::new(py);
        out.set_item("accepted_steps", d.accepted_steps)?;
        out.set_item("lagrangian_residual_max", d.lagrangian_residual_max)?;
        out.set_item("riccati_asymmetry_max", d.riccati_asymmetry_max)?;
        out.set_item("branch_pairing_max", d.branch_pairing_max)?;
        out.set_item("endpoint_mismatch_minus", d.endpoint_mismatch_minus)?;
        out.set_item("endpoint_mismatch_plus", d.endpoint_mismatch_plus)?;
        out.set_item("potential_limit_mismatch", d.potential_limit_mismatch)?;
        out.set_item("det_x_endpoints", d.det_x_endpoints)?;
        out.set_item("stable_transversality", d.stable_transversality)?;
        out.set_item("hormander_zero_verified", d.hormander_zero_verified)?;
        out.set_item("warnings", d.warnings.clone())?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!(
            "MaslovResult(lambda_={}, index={}, crossings={})",
            self.lambda,
            self.index,
            self.crossings.len()
        )
    }
}

fn wrap(py: Python<'_>, r: maslov_core::MaslovResult) -> PyResult<MaslovResult> {
    let crossings = r
        .crossings
        .into_iter()
        .map(|c| {
            Py::new(
                py,
                Crossing {
                    x0: c.x0,
                    k: c.k,
                    signature: c.signature,
                    branch_signs: c.branch_signs,
                    left_limits: c.left_limits,
                    right_limits: c.right_limits,
                    crossing_form_signature: c.crossing_form_signature,
                    residues: c.residues,
                },
            )
        })
        .collect::<PyResult<_>>()?;
    Ok(MaslovResult {
        lambda: r.lambda,
        index: r.index,
        crossings,
        diagnostics: r.diagnostics,
    })
}

/// Maslov index of the unstable path at `lam`.
#[pyfunction]
#[pyo3(signature = (problem, lam, *, method = "fixed", step = 1e-3, tol = 1e-10, half_width = 20.0))]
fn maslov_index(
    py: Python<'_>,
    problem: &Problem,
    lam: f64,
    method: &str,
    step: f64,
    tol: f64,
    half_width: f64,
) -> PyResult<MaslovResult> {
    let cfg = integrator(method, step, tol, half_width).map_err(to_py)?;
    let r = py
        .detach(|| maslov_core::maslov_index(&problem.inner, lam, &cfg))
        .map_err(to_py)?;
    wrap(py, r)
}

/// `[(lam, index or None, crossing_count or None, status)]` in input order.
#[pyfunction]
#[pyo3(signature = (problem, lambdas, *, method = "fixed", step = 1e-3, tol = 1e-10, half_width = 20.0))]
fn sweep(
    py: Python<'_>,
    problem: &Problem,
    lambdas: Vec<f64>,
    method: &str,
    step: f64,
    tol: f64,
    half_width: f64,
) -> PyResult<Vec<SweepRow>> {
    let cfg = integrator(method, step, tol, half_width).map_err(to_py)?;
    let rows = py.detach(|| maslov_core::sweep(&problem.inner, &lambdas, &cfg));
    Ok(rows
        .into_iter()
        .map(|(l, r)| match r {
            Ok(r) => (l, Some(r.index), Some(r.crossings.len()), "ok".to_string()),
            Err(e) => (l, None, None, e.kind().to_string()),
        })
        .collect())
}

/// `[(x, det_x, [mu or None], [nu])]`, one row per accepted step plus the start.
#[pyfunction]
#[pyo3(signature = (problem, lam, *, method = "fixed", step = 1e-3, tol = 1e-10, half_width = 20.0))]
fn trace(
    py: Python<'_>,
    problem: &Problem,
    lam: f64,
    method: &str,
    step: f64,
    tol: f64,
    half_width: f64,
) -> PyResult<Vec<TraceRow>> {
    let cfg = integrator(method, step, tol, half_width).map_err(to_py)?;
    py.detach(|| {
        let ev = Evolution::run(&problem.inner, lam, &cfg, &TrackerConfig::default())?;
        Ok(ev
            .states()
            .iter()
            .map(|s| (s.x, s.det_x, s.mu.clone(), s.nu.clone()))
            .collect())
    })
    .map_err(to_py)
}

fn analytic(v: AnalyticValue) -> Option<f64> {
    v.finite()
}

/// Closed-form Riccati solution of example 1; `None` at a pole.
#[pyfunction]
fn example1_analytic_s(lam: f64, x: f64) -> PyResult<Option<f64>> {
    Ok(analytic(
        examples::example1_analytic_s(lam, x).map_err(to_py)?,
    ))
}

/// Closed-form branches of example 2; `None` at a pole.
#[pyfunction]
fn example2_analytic_branches(lam: f64, c: f64, x: f64) -> PyResult<(Option<f64>, Option<f64>)> {
    let (a, b) = examples::example2_analytic_branches(lam, c, x).map_err(to_py)?;
    Ok((analytic(a), analytic(b)))
}

/// Signed pole count of the closed-form branches of `"example1"` or `"example2"`.
#[pyfunction]
#[pyo3(signature = (example, lam, c = -1.0, half_width = 20.0))]
fn analytic_maslov(example: &str, lam: f64, c: f64, half_width: f64) -> PyResult<i32> {
    let id = match example {
        "example1" => ExampleId::Example1,
        "example2" => ExampleId::Example2 { c },
        other => return Err(PyValueError::new_err(format!("unknown example {other:?}"))),
    };
    examples::analytic_maslov(id, lam, half_width).map_err(to_py)
}

#[pymodule]
fn maslov(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_class::<Crossing>()?;
    m.add_class::<MaslovResult>()?;
    m.add_function(wrap_pyfunction!(maslov_index, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    m.add_function(wrap_pyfunction!(example1_analytic_s, m)?)?;
    m.add_function(wrap_pyfunction!(example2_analytic_branches, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_maslov, m)?)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    Ok(())
}
