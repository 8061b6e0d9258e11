//! Python bindings for the Bel-Robinson energy laboratory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use brlab::config::parse_config;
use brlab::diagnostics::{gradient_lapse_estimate_check, SliceAnalysis};
use brlab::evolution::{kasner_initial_data_warped, rescale as rescale_state, time_step as step_state};
use brlab::kasner::CoordinateWarp;
use brlab::runner::run;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(brlab_py, BrlabError, PyException, "Error raised by the brlab core.");

fn to_py(e: brlab::BrError) -> PyErr {
    BrlabError::new_err(format!("{}: {e}", e.kind()))
}

#[pyclass(name = "GridSpec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGridSpec(brlab::GridSpec);

#[pymethods]
impl PyGridSpec {
    #[new]
    #[pyo3(signature = (n, period = (1.0, 1.0, 1.0)))]
    fn new(n: usize, period: (f64, f64, f64)) -> PyResult<Self> {
        brlab::GridSpec::new(n, [period.0, period.1, period.2]).map(PyGridSpec).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn period(&self) -> [f64; 3] {
        self.0.period()
    }

    fn __repr__(&self) -> String {
        format!("GridSpec(n={}, period={:?})", self.0.n(), self.0.period())
    }
}

#[pyclass(name = "KasnerParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKasnerParams(brlab::KasnerParams);

#[pymethods]
impl PyKasnerParams {
    #[new]
    fn new(p1: f64, p2: f64, p3: f64) -> PyResult<Self> {
        brlab::KasnerParams::new(p1, p2, p3).map(PyKasnerParams).map_err(to_py)
    }

    #[staticmethod]
    fn flat() -> Self {
        PyKasnerParams(brlab::KasnerParams::flat())
    }

    #[staticmethod]
    fn axisymmetric() -> Self {
        PyKasnerParams(brlab::KasnerParams::axisymmetric())
    }

    #[staticmethod]
    fn from_u(u: f64) -> PyResult<Self> {
        brlab::KasnerParams::from_u(u).map(PyKasnerParams).map_err(to_py)
    }

    #[getter]
    fn exponents(&self) -> [f64; 3] {
        self.0.exponents()
    }

    fn __repr__(&self) -> String {
        let p = self.0.exponents();
        format!("KasnerParams({}, {}, {})", p[0], p[1], p[2])
    }
}

#[pyclass(name = "SliceState", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySliceState(brlab::SliceState);

impl PySliceState {
    fn analysis(&self) -> PyResult<SliceAnalysis<'_>> {
        SliceAnalysis::new(&self.0).map_err(to_py)
    }
}

#[pymethods]
impl PySliceState {
    #[getter]
    fn t(&self) -> f64 {
        self.0.t
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.0.scale
    }

    #[getter]
    fn grid(&self) -> PyGridSpec {
        PyGridSpec(*self.0.grid())
    }

    /// Metric components per point, ordered xx, xy, xz, yy, yz, zz.
    fn metric(&self) -> Vec<[f64; 6]> {
        self.0.g.values().iter().map(|v| v.0).collect()
    }

    /// Second fundamental form per point, same ordering as `metric`.
    fn extrinsic_curvature(&self) -> Vec<[f64; 6]> {
        self.0.k.values().iter().map(|v| v.0).collect()
    }

    fn lapse(&self) -> Vec<f64> {
        self.0.n.values().to_vec()
    }

    fn br_energy(&self) -> PyResult<f64> {
        Ok(self.analysis()?.br_energy())
    }

    fn br_flux(&self) -> PyResult<f64> {
        Ok(self.analysis()?.br_flux())
    }

    fn curvature_radius(&self) -> PyResult<f64> {
        Ok(self.analysis()?.curvature_radius())
    }

    fn k_ratio(&self) -> PyResult<f64> {
        Ok(self.analysis()?.k_ratio())
    }

    fn cmc_drift(&self) -> PyResult<f64> {
        self.0.cmc_drift().map_err(to_py)
    }

    /// `(hamiltonian, momentum)` constraint norms.
    fn constraint_norms(&self) -> PyResult<(f64, f64)> {
        let c = self.analysis()?.constraint_norms();
        Ok((c.hamiltonian, c.momentum))
    }

    /// `(lhs, rhs, c_fit)` of the lapse-gradient estimate.
    fn gradient_lapse_check(&self, lambda: f64) -> PyResult<(f64, f64, f64)> {
        let c = gradient_lapse_estimate_check(&self.0, lambda).map_err(to_py)?;
        Ok((c.lhs, c.rhs, c.c_fit))
    }

    fn __repr__(&self) -> String {
        format!("SliceState(t={}, scale={}, n={})", self.0.t, self.0.scale, self.0.grid().n())
    }
}

#[pyfunction]
#[pyo3(signature = (params, t0, grid, warp = 0.0))]
fn kasner_initial_data(params: &PyKasnerParams, t0: f64, grid: &PyGridSpec, warp: f64) -> PyResult<PySliceState> {
    let w = CoordinateWarp::new(warp, grid.0.period());
    kasner_initial_data_warped(params.0, t0, grid.0, &w).map(PySliceState).map_err(to_py)
}

#[pyfunction]
fn rescale(state: &PySliceState, r: f64) -> PyResult<PySliceState> {
    let f = brlab::RescaleFactor::new(r).map_err(to_py)?;
    Ok(PySliceState(rescale_state(&state.0, f)))
}

/// One RK4 step; a negative `dt` evolves toward the past.
#[pyfunction]
#[pyo3(signature = (state, dt, trace_correction = false, cfl = None))]
fn time_step(state: &PySliceState, dt: f64, trace_correction: bool, cfl: Option<f64>) -> PyResult<PySliceState> {
    let base = brlab::EvolutionConfig::default();
    let config = brlab::EvolutionConfig {
        trace_correction,
        cfl: cfl.unwrap_or(base.cfl),
        ..base
    };
    step_state(&state.0, dt, &config).map(|o| PySliceState(o.state)).map_err(to_py)
}

#[pyfunction]
fn stable_dt(state: &PySliceState, cfl: f64) -> f64 {
    brlab::evolution::stable_dt(&state.0, cfl)
}

/// Closed-form Kasner quantities at CMC time `t` on a torus of the given volume.
#[pyfunction]
#[pyo3(signature = (params, t, volume = 1.0))]
fn oracle<'py>(py: Python<'py>, params: &PyKasnerParams, t: f64, volume: f64) -> PyResult<Bound<'py, PyDict>> {
    let o = brlab::KasnerOracle::new(params.0);
    let d = PyDict::new(py);
    d.set_item("t", t)?;
    d.set_item("metric_diag", o.metric_diag(t))?;
    d.set_item("extrinsic_diag", o.extrinsic_diag(t))?;
    d.set_item("lapse", o.lapse(t))?;
    d.set_item("br_energy", o.br_energy(t, volume))?;
    d.set_item("br_energy_rate", o.br_energy_rate(t, volume))?;
    d.set_item("curvature_radius", o.curvature_radius(t))?;
    Ok(d)
}

/// Runs a configuration given as text; returns `(passed, output)`.
#[pyfunction]
fn run_config(text: &str) -> PyResult<(bool, String)> {
    let cfg = parse_config(text).map_err(to_py)?;
    let mut out = Vec::new();
    let report = run(&cfg, &mut out).map_err(to_py)?;
    Ok((report.passed(), String::from_utf8_lossy(&out).into_owned()))
}

#[pymodule]
fn brlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BrlabError", m.py().get_type::<BrlabError>())?;
    m.add_class::<PyGridSpec>()?;
    m.add_class::<PyKasnerParams>()?;
    m.add_class::<PySliceState>()?;
    m.add_function(wrap_pyfunction!(kasner_initial_data, m)?)?;
    m.add_function(wrap_pyfunction!(rescale, m)?)?;
    m.add_function(wrap_pyfunction!(time_step, m)?)?;
    m.add_function(wrap_pyfunction!(stable_dt, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
