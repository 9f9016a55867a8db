//! Python bindings for the parareg core crate.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use parareg::coefficients::{self, CoefficientField, CoefficientKind, CoefficientParams};
use parareg::config::ExperimentConfig;
use parareg::exponents;
use parareg::fracops;
use parareg::rng::stream;
use parareg::run::{self, Subcommand};
use parareg::sample::BandLimited;
use parareg::solver::{self, RightHandSide, SolverOptions};

create_exception!(parareg_py, PararegError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    PararegError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any().unbind(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn serialize(py: Python<'_>, x: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    to_py(py, &serde_json::to_value(x).map_err(err)?)
}

fn shape(name: &str) -> PyResult<parareg::Shape> {
    match name {
        "scalar" => Ok(parareg::Shape::Scalar),
        "vector" => Ok(parareg::Shape::Vector),
        "density" => Ok(parareg::Shape::Density),
        "matrix" => Ok(parareg::Shape::Matrix),
        other => Err(err(format!("unknown shape {other:?}"))),
    }
}

#[pyclass(name = "Grid", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid(parareg::Grid);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (n, m, nt, nx, period_t=1.0, period_x=1.0))]
    fn new(
        n: usize,
        m: usize,
        nt: usize,
        nx: usize,
        period_t: f64,
        period_x: f64,
    ) -> PyResult<Self> {
        parareg::Grid::new(n, m, nt, nx, period_t, period_x).map(Self).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    #[getter]
    fn nt(&self) -> usize {
        self.0.nt()
    }

    #[getter]
    fn nx(&self) -> usize {
        self.0.nx()
    }

    #[getter]
    fn period_t(&self) -> f64 {
        self.0.period_t()
    }

    #[getter]
    fn period_x(&self) -> f64 {
        self.0.period_x()
    }

    fn points(&self) -> usize {
        self.0.points()
    }

    fn __repr__(&self) -> String {
        let g = &self.0;
        format!(
            "Grid(n={}, m={}, nt={}, nx={}, period_t={}, period_x={})",
            g.n(),
            g.m(),
            g.nt(),
            g.nx(),
            g.period_t(),
            g.period_x()
        )
    }
}

/// Complex samples on a grid, row-major in `(t, x..., component)`.
#[pyclass(name = "Field", frozen)]
struct PyField(parareg::Field);

#[pymethods]
impl PyField {
    #[staticmethod]
    fn zeros(grid: PyGrid, shape_name: &str) -> PyResult<Self> {
        Ok(Self(parareg::Field::zeros(grid.0, shape(shape_name)?)))
    }

    #[staticmethod]
    fn from_values(grid: PyGrid, shape_name: &str, values: Vec<Complex64>) -> PyResult<Self> {
        parareg::Field::from_vec(grid.0, shape(shape_name)?, values).map(Self).map_err(err)
    }

    /// Band-limited random field with `|k_t| <= kt_max`, `|k_x| <= kx_max`.
    #[staticmethod]
    #[pyo3(signature = (grid, shape_name, kt_max, kx_max, seed, real=false))]
    fn band_limited(
        grid: PyGrid,
        shape_name: &str,
        kt_max: usize,
        kx_max: usize,
        seed: u64,
        real: bool,
    ) -> PyResult<Self> {
        let mut band = BandLimited::new(kt_max, kx_max);
        if real {
            band = band.real();
        }
        band.sample(&grid.0, shape(shape_name)?, &mut stream(seed, "python")).map(Self).map_err(err)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    fn values(&self) -> Vec<Complex64> {
        self.0.data().to_vec()
    }

    fn norm_l2(&self) -> f64 {
        self.0.norm_l2()
    }

    fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    fn lp_norm(&self, p: f64) -> PyResult<f64> {
        parareg::grid::lp_norm(&self.0, p).map_err(err)
    }

    fn __sub__(&self, other: &PyField) -> PyResult<Self> {
        self.0.sub(&other.0).map(Self).map_err(err)
    }

    fn __add__(&self, other: &PyField) -> PyResult<Self> {
        self.0.add(&other.0).map(Self).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.data().len()
    }
}

#[pyclass(name = "Coefficients", frozen)]
struct PyCoefficients(CoefficientField);

#[pymethods]
impl PyCoefficients {
    #[staticmethod]
    #[pyo3(signature = (grid, kind, seed=0, lam=1.0, contrast=5.0, cell_t=0.125, cell_x=None, skew=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        grid: PyGrid,
        kind: &str,
        seed: u64,
        lam: f64,
        contrast: f64,
        cell_t: f64,
        cell_x: Option<f64>,
        skew: f64,
    ) -> PyResult<Self> {
        let kind: CoefficientKind =
            serde_json::from_value(Value::String(kind.into())).map_err(err)?;
        let params = CoefficientParams { lambda: lam, contrast, cell_t, cell_x, skew, bound: None };
        CoefficientField::generate(grid.0, kind, &params, seed).map(Self).map_err(err)
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda()
    }

    #[getter]
    fn sup_norm(&self) -> f64 {
        self.0.sup_norm()
    }

    #[pyo3(signature = (trials=200, seed=0))]
    fn verify_garding(&self, py: Python<'_>, trials: usize, seed: u64) -> PyResult<Py<PyAny>> {
        let rep = coefficients::verify_garding(&self.0, trials, seed);
        let d = PyDict::new(py);
        d.set_item("lambda_est", rep.lambda_est)?;
        d.set_item("kappa", rep.kappa)?;
        d.set_item("trials", rep.trials)?;
        Ok(d.into_any().unbind())
    }

    fn coercivity_margin(&self, v: &PyField, delta: Option<f64>) -> PyResult<f64> {
        let delta = delta.unwrap_or_else(|| solver::default_delta(&self.0));
        let ev = solver::EnergyVector::new(v.0.clone()).map_err(err)?;
        solver::coercivity_margin(&self.0, delta, &ev).map_err(err)
    }
}

#[pyfunction]
fn half_derivative_t(u: &PyField) -> PyField {
    PyField(fracops::half_derivative_t(&u.0))
}

#[pyfunction]
fn hilbert_t(u: &PyField) -> PyField {
    PyField(fracops::hilbert_t(&u.0))
}

#[pyfunction]
fn time_derivative(u: &PyField) -> PyField {
    PyField(fracops::time_derivative(&u.0))
}

#[pyfunction]
fn factored_time_derivative(u: &PyField) -> PyField {
    PyField(fracops::factored_time_derivative(&u.0))
}

#[pyfunction]
fn gradient_x(u: &PyField) -> PyResult<PyField> {
    fracops::gradient_x(&u.0).map(PyField).map_err(err)
}

/// Solves `d_t u - div A grad u + (kappa + 1) u = f + div F`; returns `(u, report)`.
#[pyfunction]
#[pyo3(signature = (a, f, ff=None, kappa=0.0, tol=1e-8))]
fn solve(
    py: Python<'_>,
    a: &PyCoefficients,
    f: &PyField,
    ff: Option<&PyField>,
    kappa: f64,
    tol: f64,
) -> PyResult<(PyField, Py<PyAny>)> {
    let g = *f.0.grid();
    let flux =
        ff.map(|x| x.0.clone()).unwrap_or_else(|| parareg::Field::zeros(g, parareg::Shape::Vector));
    let rhs = RightHandSide::new(f.0.clone(), flux).map_err(err)?;
    let (v, rep) = py
        .detach(|| solver::solve(&a.0, kappa, &rhs, &SolverOptions::with_tol(tol)))
        .map_err(err)?;
    Ok((PyField(v.into_field()), serialize(py, &rep)?))
}

#[pyfunction]
fn energy_identity_defect(v: &PyField) -> PyResult<f64> {
    solver::energy_identity_defect(&v.0).map_err(err)
}

/// Exact exponent table for rational strings `s`, `p`; values are fraction strings.
#[pyfunction]
fn solve_exponents(py: Python<'_>, s: &str, p: &str, n: usize) -> PyResult<Py<PyAny>> {
    let s = exponents::parse(s).map_err(err)?;
    let p = exponents::parse(p).map_err(err)?;
    let c = exponents::solve_exponents(s, p, n).map_err(err)?;
    let d = PyDict::new(py);
    for (k, v) in [
        ("s", c.s),
        ("p", c.p),
        ("alpha", c.alpha),
        ("beta", c.beta),
        ("q_alpha", c.q_alpha),
        ("q_beta", c.q_beta),
    ] {
        d.set_item(k, v.to_string())?;
    }
    d.set_item("n", c.n)?;
    Ok(d.into_any().unbind())
}

/// Runs a CLI subcommand from a TOML file and returns the manifest.
#[pyfunction]
#[pyo3(signature = (subcommand, config, out, grid_level=None))]
fn run_experiment(
    py: Python<'_>,
    subcommand: &str,
    config: PathBuf,
    out: PathBuf,
    grid_level: Option<u32>,
) -> PyResult<Py<PyAny>> {
    let sub: Subcommand = subcommand.parse().map_err(err)?;
    let cfg = ExperimentConfig::load(&config).map_err(err)?;
    let manifest = py.detach(|| run::run(sub, &cfg, &out, grid_level)).map_err(err)?;
    serialize(py, &manifest)
}

#[pymodule]
fn parareg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PararegError", m.py().get_type::<PararegError>())?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyCoefficients>()?;
    m.add_function(wrap_pyfunction!(half_derivative_t, m)?)?;
    m.add_function(wrap_pyfunction!(hilbert_t, m)?)?;
    m.add_function(wrap_pyfunction!(time_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(factored_time_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_x, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(energy_identity_defect, m)?)?;
    m.add_function(wrap_pyfunction!(solve_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
