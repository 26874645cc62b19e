//! Python bindings: sampled functions, α-fractal construction, scaling
//! intervals, approximation and dimension estimates.

use std::fs::File;
use std::io::BufWriter;
use std::sync::Arc;

use gasketlab::approx::{basis_functions, best_chebyshev, best_one_sided_below, LinearProgram};
use gasketlab::constraints::{admissible_intervals as intervals, compute_extrema};
use gasketlab::dimension::{
    dimension_report as report, estimate_dimension as estimate, gasket_dimension as sg_dim,
};
use gasketlab::energy::{
    graph_energy, graph_laplacian, harmonic_extend, harmonic_on, pointwise_laplacian,
};
use gasketlab::expr::parse;
use gasketlab::fractal::{construct, BaseChoice, FractalResult, FractalSystem, ScalingFamily};
use gasketlab::{build_level_graph, export, sample, Quadrature, SGFunction};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};
use serde_json::Value;

create_exception!(
    gasketlab,
    GasketlabError,
    PyException,
    "Raised for every library failure; the message starts with a stable code."
);

fn err(e: impl Into<gasketlab::Error>) -> PyErr {
    let e = e.into();
    GasketlabError::new_err(format!("{}: {e}", e.code()))
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &serde_json::to_value(value).map_err(err)?)
}

/// Real values on the vertices of a level-`m` gasket graph.
#[pyclass(name = "SGFunction", module = "gasketlab", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySGFunction {
    inner: SGFunction,
}

#[pymethods]
impl PySGFunction {
    /// Samples an expression in `x`, `y` on `V_level`.
    #[staticmethod]
    fn sample(expr: &str, level: usize) -> PyResult<Self> {
        let e = parse(expr).map_err(err)?;
        let graph = build_level_graph(level).map_err(err)?;
        Ok(Self {
            inner: sample(&e, &graph).map_err(err)?,
        })
    }

    /// Harmonic extension of the corner values `(f(p1), f(p2), f(p3))`.
    #[staticmethod]
    fn harmonic(boundary: [f64; 3], level: usize) -> PyResult<Self> {
        Ok(Self {
            inner: harmonic_extend(boundary, level).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_values(level: usize, values: Vec<f64>) -> PyResult<Self> {
        let graph = build_level_graph(level).map_err(err)?;
        Ok(Self {
            inner: SGFunction::new(graph, values).map_err(err)?,
        })
    }

    #[getter]
    fn level(&self) -> usize {
        self.inner.level()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    /// Vertex coordinates in id order.
    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.inner
            .graph()
            .points()
            .iter()
            .map(|p| (p.x, p.y))
            .collect()
    }

    fn value(&self, id: usize) -> PyResult<f64> {
        self.inner
            .values()
            .get(id)
            .copied()
            .ok_or_else(|| PyValueError::new_err(format!("vertex id {id} out of range")))
    }

    fn min(&self) -> f64 {
        self.inner.min()
    }

    fn max(&self) -> f64 {
        self.inner.max()
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn sup_distance(&self, other: &PySGFunction) -> PyResult<f64> {
        if other.inner.values().len() != self.inner.values().len() {
            return Err(PyValueError::new_err("functions live on different levels"));
        }
        Ok(self.inner.sup_distance(&other.inner))
    }

    /// `E_m` for `m = 0..=level`.
    fn energies(&self) -> PyResult<Vec<f64>> {
        (0..=self.inner.level())
            .map(|m| graph_energy(&self.inner, m).map_err(err))
            .collect()
    }

    /// Laplacian at the interior vertices of `V_m` (ids 3 onwards).
    #[pyo3(signature = (m, pointwise = false))]
    fn laplacian(&self, m: usize, pointwise: bool) -> PyResult<Vec<f64>> {
        let field = if pointwise {
            pointwise_laplacian(&self.inner, m)
        } else {
            graph_laplacian(&self.inner, m)
        };
        Ok(field.map_err(err)?.values().to_vec())
    }

    #[pyo3(signature = (path, z_scale = 1.0))]
    fn write_ply(&self, path: &str, z_scale: f64) -> PyResult<()> {
        let file = File::create(path).map_err(err)?;
        export::write_ply(BufWriter::new(file), &self.inner, z_scale).map_err(err)
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        let file = File::create(path).map_err(err)?;
        export::write_vertices_csv(BufWriter::new(file), &self.inner).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "SGFunction(level={}, vertices={})",
            self.inner.level(),
            self.inner.values().len()
        )
    }
}

/// Output of the fractal cascade.
#[pyclass(name = "FractalResult", module = "gasketlab", frozen)]
pub struct PyFractalResult {
    inner: FractalResult,
}

#[pymethods]
impl PyFractalResult {
    #[getter]
    fn values(&self) -> PySGFunction {
        PySGFunction {
            inner: self.inner.values.clone(),
        }
    }

    #[getter]
    fn word_len(&self) -> usize {
        self.inner.word_len
    }

    #[getter]
    fn junction_discrepancy(&self) -> f64 {
        self.inner.junction_discrepancy
    }

    #[getter]
    fn sup_distance(&self) -> f64 {
        self.inner.sup_distance
    }

    #[getter]
    fn alpha_norm(&self) -> f64 {
        self.inner.alpha_norm
    }

    fn __repr__(&self) -> String {
        format!(
            "FractalResult(level={}, word_len={}, sup_distance={:e})",
            self.inner.values.level(),
            self.inner.word_len,
            self.inner.sup_distance
        )
    }
}

fn uniform(n: usize, alpha: f64) -> PyResult<ScalingFamily> {
    ScalingFamily::uniform(n, alpha).map_err(err)
}

/// α-fractal function of `f` with constant scaling on `V_level`; `b`
/// defaults to the harmonic function with `f`'s corner values.
#[pyfunction]
#[pyo3(signature = (f_expr, alpha, n = 1, level = 6, b_expr = None))]
fn fractal(
    f_expr: &str,
    alpha: f64,
    n: usize,
    level: usize,
    b_expr: Option<&str>,
) -> PyResult<PyFractalResult> {
    let base = match b_expr {
        Some(src) => BaseChoice::Function(Arc::new(parse(src).map_err(err)?)),
        None => BaseChoice::Harmonic,
    };
    let system = FractalSystem {
        f: Arc::new(parse(f_expr).map_err(err)?),
        base,
        alpha: uniform(n, alpha)?,
        level,
    };
    Ok(PyFractalResult {
        inner: construct(&system).map_err(err)?,
    })
}

/// `F^α(f)` with the harmonic base.
#[pyfunction]
#[pyo3(signature = (f, alpha, n = 1))]
fn fractal_operator(f: &PySGFunction, alpha: f64, n: usize) -> PyResult<PyFractalResult> {
    Ok(PyFractalResult {
        inner: gasketlab::fractal::fractal_operator(&f.inner, &uniform(n, alpha)?).map_err(err)?,
    })
}

/// Recovers `f` from `g = F^α(f)`.
#[pyfunction]
#[pyo3(signature = (g, alpha, n = 1))]
fn invert_operator(g: &PySGFunction, alpha: f64, n: usize) -> PyResult<PySGFunction> {
    Ok(PySGFunction {
        inner: gasketlab::fractal::invert_operator(&g.inner, &uniform(n, alpha)?).map_err(err)?,
    })
}

/// Per-word scaling intervals keeping `f^α` within `[0, m_tilde]`.
#[pyfunction]
#[pyo3(signature = (f, m_tilde = None, n = 1, b = None))]
fn admissible_intervals<'py>(
    py: Python<'py>,
    f: &PySGFunction,
    m_tilde: Option<f64>,
    n: usize,
    b: Option<&PySGFunction>,
) -> PyResult<Bound<'py, PyAny>> {
    let f = &f.inner;
    let b = match b {
        Some(b) => b.inner.clone(),
        None => harmonic_on(f.graph(), [f.value(0), f.value(1), f.value(2)]),
    };
    let rep = compute_extrema(f, &b, n).map_err(err)?;
    serialize(py, &intervals(&rep, m_tilde.unwrap_or_else(|| f.max())))
}

/// Nonnegative fractal function within `eps` of a nonnegative `f`.
#[pyfunction]
#[pyo3(signature = (f, eps, n = 1))]
fn positive_perturbation<'py>(
    py: Python<'py>,
    f: &PySGFunction,
    eps: f64,
    n: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p = gasketlab::constraints::positive_perturbation(&f.inner, eps, n).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("harmonic_level", p.harmonic_level)?;
    d.set_item("interpolation_error", p.interpolation_error)?;
    d.set_item("alpha_bound", p.alpha_bound)?;
    d.set_item("min_value", p.min_value)?;
    d.set_item("error", p.error)?;
    d.set_item(
        "result",
        PySGFunction {
            inner: p.result.values,
        },
    )?;
    Ok(d)
}

/// Best uniform (`"chebyshev"`) or one-sided-from-below (`"onesided"`)
/// approximation of `f_expr` from `H_k`, or from `F^α(H_k)` when `alpha` is
/// given.
#[pyfunction]
#[pyo3(signature = (f_expr, mode = "chebyshev", k = 0, m = 6, alpha = None, n = 1))]
fn approximate<'py>(
    py: Python<'py>,
    f_expr: &str,
    mode: &str,
    k: usize,
    m: usize,
    alpha: Option<f64>,
    n: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let alpha = alpha.map(|a| uniform(n, a)).transpose()?;
    let (basis, kind) = basis_functions(k, m, alpha.as_ref()).map_err(err)?;
    let graph = basis[0].graph().clone();
    let f = sample(&parse(f_expr).map_err(err)?, &graph).map_err(err)?;
    let result = match mode {
        "chebyshev" => best_chebyshev(&f, &basis),
        "onesided" => best_one_sided_below(&f, &basis, &Quadrature::new(&graph, m).map_err(err)?),
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
    .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("basis", serialize(py, &kind)?)?;
    d.set_item("coefficients", result.coefficients)?;
    d.set_item("error", result.error)?;
    d.set_item("active", result.active)?;
    d.set_item("m", result.m)?;
    d.set_item(
        "approximant",
        PySGFunction {
            inner: result.approximant,
        },
    )?;
    Ok(d)
}

/// Maximises `c·x` subject to `rows · x ≤ rhs`.
#[pyfunction]
fn solve_lp<'py>(
    py: Python<'py>,
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    if rows.len() != rhs.len() {
        return Err(PyValueError::new_err("rows and rhs differ in length"));
    }
    let mut lp = LinearProgram::new(objective);
    for (row, b) in rows.into_iter().zip(rhs) {
        lp.leq(row, b);
    }
    serialize(py, &gasketlab::approx::solve_lp(&lp).map_err(err)?)
}

/// Box-count report of an expression sampled on `V_{n_max + q}`.
#[pyfunction]
#[pyo3(signature = (f_expr, n_min = 3, n_max = 8, q = 3))]
fn estimate_dimension<'py>(
    py: Python<'py>,
    f_expr: &str,
    n_min: usize,
    n_max: usize,
    q: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let e = parse(f_expr).map_err(err)?;
    serialize(py, &estimate(&e, n_min, n_max, q).map_err(err)?)
}

/// Box-count report of an already sampled function.
#[pyfunction]
#[pyo3(signature = (f, n_min = 3, n_max = None))]
fn dimension_report<'py>(
    py: Python<'py>,
    f: &PySGFunction,
    n_min: usize,
    n_max: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let n_max = n_max.unwrap_or_else(|| f.inner.level().saturating_sub(3));
    serialize(py, &report(&f.inner, n_min, n_max).map_err(err)?)
}

/// `log 3 / log 2`.
#[pyfunction]
fn gasket_dimension() -> f64 {
    sg_dim()
}

#[pymodule(name = "gasketlab")]
fn gasketlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("GasketlabError", m.py().get_type::<GasketlabError>())?;
    m.add_class::<PySGFunction>()?;
    m.add_class::<PyFractalResult>()?;
    m.add_function(wrap_pyfunction!(fractal, m)?)?;
    m.add_function(wrap_pyfunction!(fractal_operator, m)?)?;
    m.add_function(wrap_pyfunction!(invert_operator, m)?)?;
    m.add_function(wrap_pyfunction!(admissible_intervals, m)?)?;
    m.add_function(wrap_pyfunction!(positive_perturbation, m)?)?;
    m.add_function(wrap_pyfunction!(approximate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_lp, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(dimension_report, m)?)?;
    m.add_function(wrap_pyfunction!(gasket_dimension, m)?)?;
    Ok(())
}
