//! Python bindings: run configuration, an interactive simulation handle,
//! and the diagnostic studies (reports are returned as plain dicts).

use std::path::PathBuf;

use numpy::{PyArray1, PyArray2, PyReadonlyArray2, ToPyArray};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

use chns_core::config::RunConfig;
use chns_core::diagnostics::EnergyReport;
use chns_core::operators::stencil::divergence;
use chns_core::physics::energy_j;
use chns_core::solver::Stepper;
use chns_core::state::FieldState;
use chns_core::{io, studies, trajectory};

create_exception!(chns, ChnsError, PyException);

fn err(e: chns_core::Error) -> PyErr {
    ChnsError::new_err(format!("[{}] {e}", e.kind()))
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| ChnsError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Validated run configuration (INI).
#[pyclass(name = "Config", module = "chns", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    /// Parses INI text; with no argument, the defaults.
    #[new]
    #[pyo3(signature = (text = None))]
    fn new(text: Option<&str>) -> PyResult<Self> {
        let inner = match text {
            Some(t) => RunConfig::parse(t).map_err(err)?,
            None => RunConfig::default(),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: RunConfig::from_file(path).map_err(err)?,
        })
    }

    /// Canonical INI text; parses back to an equal config.
    fn to_ini(&self) -> String {
        self.inner.to_ini()
    }

    /// SHA-256 of the canonical text.
    fn hash(&self) -> String {
        self.inner.hash()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner)
    }

    #[getter]
    fn grid(&self) -> (usize, usize) {
        (self.inner.domain.nx, self.inner.domain.ny)
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.scheme.dt
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.inner.run.t_end
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let d = &self.inner.domain;
        format!("Config(grid={}x{}, Lx={}, Ly={}, dt={})", d.nx, d.ny, d.lx, d.ly, self.inner.scheme.dt)
    }
}

/// A stepper plus the current state, seeded from the config.
#[pyclass(name = "Simulation", module = "chns")]
struct PySimulation {
    stepper: Stepper,
    initial: FieldState,
    state: FieldState,
    ledger: Vec<EnergyReport>,
}

#[pymethods]
impl PySimulation {
    #[new]
    fn new(config: &PyConfig) -> PyResult<Self> {
        let (stepper, initial) = studies::prepare(&config.inner).map_err(err)?;
        Ok(Self {
            stepper,
            state: initial.clone(),
            initial,
            ledger: vec![],
        })
    }

    /// Advances `n` steps, appending to the energy ledger.
    #[pyo3(signature = (n = 1))]
    fn step(&mut self, py: Python<'_>, n: usize) -> PyResult<()> {
        let (st, cur) = (&self.stepper, self.state.clone());
        let (state, rows) = py
            .detach(|| {
                let mut cur = cur;
                let mut rows = Vec::with_capacity(n);
                for _ in 0..n {
                    let next = st.step(&cur)?;
                    rows.push(st.energy_report(&cur, &next));
                    cur = next;
                }
                Ok((cur, rows))
            })
            .map_err(err)?;
        self.state = state;
        self.ledger.extend(rows);
        Ok(())
    }

    #[getter]
    fn t(&self) -> f64 {
        self.state.t
    }

    fn phi<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        self.state.phi.to_pyarray(py)
    }

    fn mu<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        self.state.mu.to_pyarray(py)
    }

    /// `(ux, uy)` on the x- and y-faces.
    fn velocity<'py>(&self, py: Python<'py>) -> (Bound<'py, PyArray2<f64>>, Bound<'py, PyArray2<f64>>) {
        (self.state.u.ux.to_pyarray(py), self.state.u.uy.to_pyarray(py))
    }

    /// `(lower, upper)` wall traces of the order parameter.
    fn phi_wall<'py>(&self, py: Python<'py>) -> (Bound<'py, PyArray1<f64>>, Bound<'py, PyArray1<f64>>) {
        let w = &self.state.phi_gamma;
        (w.lower.to_pyarray(py), w.upper.to_pyarray(py))
    }

    /// Total energy `J` of the current state.
    fn energy(&self) -> f64 {
        let s = &self.state;
        energy_j(self.stepper.grid(), self.stepper.params(), &s.u, &s.phi_pair()).total
    }

    fn mean_phi(&self) -> f64 {
        self.state.mean_phi()
    }

    /// Relative drift of the bulk mean since the initial state.
    fn mass_drift(&self) -> f64 {
        chns_core::solver::mass_drift(&self.initial, &self.state)
    }

    fn max_divergence(&self) -> f64 {
        divergence(self.stepper.grid(), &self.state.u)
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Energy ledger, one dict per step.
    fn ledger<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.ledger)
    }
}

/// Production run into `out`; returns the run summary.
#[pyfunction]
fn run<'py>(py: Python<'py>, config: &PyConfig, out: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let (_, s) = py.detach(|| studies::run_to_dir(&config.inner, &out)).map_err(err)?;
    to_dict(py, &s)
}

/// Continues an interrupted run from its manifest.
#[pyfunction]
fn resume<'py>(py: Python<'py>, manifest: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let (_, s) = py.detach(|| studies::resume(&manifest)).map_err(err)?;
    to_dict(py, &s)
}

/// Reads snapshot `index` from a run directory as a dict of arrays.
#[pyfunction]
fn read_snapshot<'py>(py: Python<'py>, dir: PathBuf, index: usize) -> PyResult<Bound<'py, PyAny>> {
    let s = io::read_snapshot(&dir, index).map_err(err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("t", s.t)?;
    d.set_item("ux", s.u.ux.to_pyarray(py))?;
    d.set_item("uy", s.u.uy.to_pyarray(py))?;
    d.set_item("phi", s.phi.to_pyarray(py))?;
    d.set_item("phi_lower", s.phi_gamma.lower.to_pyarray(py))?;
    d.set_item("phi_upper", s.phi_gamma.upper.to_pyarray(py))?;
    d.set_item("mu", s.mu.to_pyarray(py))?;
    d.set_item("p", s.p.to_pyarray(py))?;
    Ok(d.into_any())
}

#[pyfunction]
fn verify_operators<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| studies::operator_study(&config.inner)).map_err(err)?;
    to_dict(py, &r)
}

#[pyfunction]
fn energy_report<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyAny>> {
    let (r, _) = py.detach(|| studies::energy_study(&config.inner)).map_err(err)?;
    to_dict(py, &r)
}

/// Absorbing-set fit plus time-averaged bounds.
#[pyfunction]
fn absorption<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyAny>> {
    let (a, t) = py
        .detach(|| {
            let a = studies::absorption_study(&config.inner)?;
            let t = studies::time_averaged_study(&config.inner, &a.reference)?;
            Ok((a.study, t))
        })
        .map_err(err)?;
    to_dict(py, &serde_json::json!({ "absorption": a, "time_averaged": t }))
}

#[pyfunction]
#[pyo3(signature = (config, perturbation = None))]
fn gronwall<'py>(py: Python<'py>, config: &PyConfig, perturbation: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let eps = perturbation.unwrap_or(config.inner.diagnostics.perturbation);
    let r = py.detach(|| studies::gronwall_study(&config.inner, eps)).map_err(err)?;
    to_dict(py, &r)
}

#[pyfunction]
fn trajectory_dim<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| studies::trajectory_study(&config.inner)).map_err(err)?;
    to_dict(py, &r.study)
}

#[pyfunction]
fn check_hypotheses<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyAny>> {
    let r = studies::hypothesis_study(&config.inner).map_err(err)?;
    to_dict(py, &r)
}

/// Correlation dimension of a point set from its symmetric distance matrix.
#[pyfunction]
#[pyo3(signature = (distances, seed = 0))]
fn fractal_dimension<'py>(
    py: Python<'py>,
    distances: PyReadonlyArray2<'py, f64>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let a = distances.as_array();
    let (n, m) = a.dim();
    let d = nalgebra::DMatrix::from_fn(n, m, |i, j| a[[i, j]]);
    let r = py.detach(|| trajectory::fractal_dimension(&d, seed)).map_err(err)?;
    to_dict(py, &r)
}

#[pymodule]
fn chns(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ChnsError", m.py().get_type::<ChnsError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PySimulation>()?;
    for f in [
        wrap_pyfunction!(run, m)?,
        wrap_pyfunction!(resume, m)?,
        wrap_pyfunction!(read_snapshot, m)?,
        wrap_pyfunction!(verify_operators, m)?,
        wrap_pyfunction!(energy_report, m)?,
        wrap_pyfunction!(absorption, m)?,
        wrap_pyfunction!(gronwall, m)?,
        wrap_pyfunction!(trajectory_dim, m)?,
        wrap_pyfunction!(check_hypotheses, m)?,
        wrap_pyfunction!(fractal_dimension, m)?,
    ] {
        m.add_function(f)?;
    }
    Ok(())
}
