//! Python bindings for the `rbclock` simulator.
//!
//! Frequencies cross the boundary in Hz, lengths in metres, speeds in m/s.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rbclock::analysis::{shift_at, QualityMetrics};
use rbclock::average::{averaged_spectrum, averaged_spectrum_at};
use rbclock::config::load_config_with_overrides;
use rbclock::error::Error;
use rbclock::laser;
use rbclock::optimizer::{self, SweepOptions, SweepResult};
use rbclock::propagator::{excitation_probability, magnus_unitary, trotter_unitary};
use rbclock::RunConfig;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn to_py(e: Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// A validated run configuration.
#[pyclass(name = "Config", frozen)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    /// Parses a TOML document (empty for defaults) and applies `key=value` overrides.
    #[new]
    #[pyo3(signature = (toml = "", overrides = Vec::new()))]
    fn new(toml: &str, overrides: Vec<String>) -> PyResult<Self> {
        let inner = load_config_with_overrides(toml, &overrides).map_err(to_py)?;
        Ok(PyConfig { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, overrides = Vec::new()))]
    fn from_file(path: &str, overrides: Vec<String>) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        Self::new(&text, overrides)
    }

    /// Copy with further overrides applied.
    fn with_overrides(&self, overrides: Vec<String>) -> PyResult<Self> {
        Self::new(&self.inner.to_toml(), overrides)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn recoil_shift_hz(&self) -> f64 {
        self.inner.species.recoil_shift_hz()
    }

    #[getter]
    fn rayleigh_range(&self) -> f64 {
        self.inner.laser.rayleigh_range()
    }

    #[getter]
    fn detuning_hz(&self) -> Vec<f64> {
        self.inner.detuning.iter().map(|d| d / TWO_PI).collect()
    }
}

/// Averaged spectrum over the configured detunings, or over `detuning_hz` if given.
#[pyfunction]
#[pyo3(signature = (config, detuning_hz = None))]
fn spectrum<'py>(py: Python<'py>, config: &PyConfig, detuning_hz: Option<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let c = &config.inner;
    let s = py
        .detach(|| match detuning_hz {
            Some(d) => averaged_spectrum_at(c, &d.iter().map(|x| x * TWO_PI).collect::<Vec<_>>()),
            None => averaged_spectrum(c),
        })
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("detuning_hz", s.detuning.iter().map(|d| d / TWO_PI).collect::<Vec<_>>())?;
    out.set_item("background", &s.background)?;
    out.set_item("contrast", &s.contrast)?;
    out.set_item("signal", &s.signal)?;
    out.set_item("envelope_lower", s.envelope_lower())?;
    out.set_item("envelope_upper", s.envelope_upper())?;
    Ok(out)
}

/// Half area Φ and phase ψ of one zone at distance `z` from the waist.
#[pyfunction]
fn effective_pulse(config: &PyConfig, z: f64, v: f64, detuning_hz: f64) -> (f64, f64) {
    let c = &config.inner;
    let p = laser::effective_pulse(&c.laser, z, v, c.velocity.reference_speed, detuning_hz * TWO_PI);
    (p.half_area, p.phase)
}

/// Single-zone excitation probability from the Magnus pulse.
#[pyfunction]
fn magnus_excitation(config: &PyConfig, z: f64, v: f64, detuning_hz: f64) -> f64 {
    let c = &config.inner;
    let p = laser::effective_pulse(&c.laser, z, v, c.velocity.reference_speed, detuning_hz * TWO_PI);
    excitation_probability(&magnus_unitary(&p))
}

/// Single-zone excitation probability from an `steps`-segment time-ordered product.
#[pyfunction]
fn trotter_excitation(config: &PyConfig, z: f64, v: f64, detuning_hz: f64, steps: usize) -> PyResult<f64> {
    let c = &config.inner;
    let u = trotter_unitary(&c.laser, z, v, c.velocity.reference_speed, detuning_hz * TWO_PI, steps).map_err(to_py)?;
    Ok(excitation_probability(&u))
}

/// Brightness, contrast and F/F₀ at the lower recoil resonance.
#[pyfunction]
fn metrics<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyDict>> {
    let q = py.detach(|| QualityMetrics::at_resonance(&config.inner)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("b0", q.brightness)?;
    out.set_item("c0", q.contrast)?;
    out.set_item("r", q.r)?;
    out.set_item("fisher_ratio", q.fisher_ratio)?;
    Ok(out)
}

/// Fringe phase fit near the lower recoil resonance.
#[pyfunction]
fn shift<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyDict>> {
    let f = py.detach(|| shift_at(&config.inner)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("shift_hz", f.shift / TWO_PI)?;
    out.set_item("fringe_time_s", f.fringe_time)?;
    out.set_item("window_hz", f.window / TWO_PI)?;
    out.set_item("residual_rad", f.residual)?;
    Ok(out)
}

fn sweep_dict<'py>(py: Python<'py>, r: &SweepResult) -> PyResult<Bound<'py, PyDict>> {
    let col = |f: fn(&optimizer::SweepNode) -> f64| r.nodes.iter().map(f).collect::<Vec<f64>>();
    let out = PyDict::new(py);
    out.set_item("parameter", r.parameter.name())?;
    out.set_item("value", col(|n| n.value))?;
    out.set_item("b0", col(|n| n.brightness))?;
    out.set_item("c0", col(|n| n.contrast))?;
    out.set_item("fisher_ratio", col(|n| n.fisher_ratio))?;
    out.set_item("shift_hz", col(|n| n.shift / TWO_PI))?;
    out.set_item("stability_per_m", col(|n| n.stability))?;
    out.set_item("argmax_fisher", (r.argmax_fisher.value, r.argmax_fisher.metric))?;
    out.set_item("argmax_brightness", (r.argmax_brightness.value, r.argmax_brightness.metric))?;
    Ok(out)
}

/// Metrics over `nodes` waist positions on [start, stop] (m).
#[pyfunction]
#[pyo3(signature = (config, start, stop, nodes, shifts = true))]
fn sweep_waist_position<'py>(
    py: Python<'py>,
    config: &PyConfig,
    start: f64,
    stop: f64,
    nodes: usize,
    shifts: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = SweepOptions {
        shifts,
        ..SweepOptions::default()
    };
    let r = py
        .detach(|| optimizer::sweep_waist_position(&config.inner, (start, stop), nodes, &opts))
        .map_err(to_py)?;
    sweep_dict(py, &r)
}

/// Metrics over `nodes` waist radii on [start, stop] (m).
#[pyfunction]
#[pyo3(signature = (config, start, stop, nodes, shifts = false))]
fn sweep_waist_size<'py>(
    py: Python<'py>,
    config: &PyConfig,
    start: f64,
    stop: f64,
    nodes: usize,
    shifts: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = SweepOptions {
        shifts,
        ..SweepOptions::default()
    };
    let r = py
        .detach(|| optimizer::sweep_waist_size(&config.inner, (start, stop), nodes, &opts))
        .map_err(to_py)?;
    sweep_dict(py, &r)
}

#[pymodule]
fn rbclock_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(effective_pulse, m)?)?;
    m.add_function(wrap_pyfunction!(magnus_excitation, m)?)?;
    m.add_function(wrap_pyfunction!(trotter_excitation, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(shift, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_waist_position, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_waist_size, m)?)?;
    Ok(())
}
