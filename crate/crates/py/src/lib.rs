//! Python bindings: states, the HOM measurement formulas, and the three
//! learning loops. Long runs release the GIL.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sgqgan::config::parse_config;
use sgqgan::interference::{coincidence_prob_dip, coincidence_prob_multiphase as prob_multiphase};
use sgqgan::learner::builtin_target;
use sgqgan::process::{default_probes, parse_waveplates, process_fidelity};
use sgqgan::quantum::{self, apply_unitary};
use sgqgan::runner::execute;
use sgqgan::{
    BlackBoxProcess, HomMeasurementModel, JonesUnitary as CoreUnitary, PhaseEstimationTask, PhaseScene,
    PureState as CoreState, SceneSource, StateLearningTask,
};

fn value_err(e: sgqgan::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Normalized pure state in canonical gauge.
#[pyclass(name = "PureState", module = "sgqgan_py", frozen, skip_from_py_object, eq)]
#[derive(Clone, PartialEq)]
struct PyPureState(CoreState);

#[pymethods]
impl PyPureState {
    /// Normalizes `amplitudes`; raises ValueError for a zero vector.
    #[new]
    fn new(amplitudes: Vec<Complex64>) -> PyResult<Self> {
        CoreState::new(amplitudes).map(PyPureState).map_err(value_err)
    }

    /// Parses `"0.75, 0.07+0.65i"` or a builtin name such as `"psi_t3"`.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        builtin_target(text).map(Ok).unwrap_or_else(|| text.parse::<CoreState>()).map(PyPureState).map_err(value_err)
    }

    #[staticmethod]
    fn random(dim: usize, seed: u64) -> PyResult<Self> {
        if dim < 2 {
            return Err(PyValueError::new_err("dim must be at least 2"));
        }
        Ok(PyPureState(CoreState::random(dim, &mut ChaCha8Rng::seed_from_u64(seed))))
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amps().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("PureState('{}')", self.0)
    }
}

/// 2×2 unitary acting on polarization (Jones) vectors.
#[pyclass(name = "JonesUnitary", module = "sgqgan_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyJonesUnitary(CoreUnitary);

#[pymethods]
impl PyJonesUnitary {
    /// Wave-plate stack such as `"hwp:22.5,qwp:45"` (degrees, applied in order).
    #[staticmethod]
    fn from_waveplates(spec: &str) -> PyResult<Self> {
        parse_waveplates(spec).map(PyJonesUnitary).map_err(value_err)
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let m = self.0.matrix();
        (0..2).map(|r| (0..2).map(|c| m[(r, c)]).collect()).collect()
    }

    fn apply(&self, state: &PyPureState) -> PyResult<PyPureState> {
        apply_unitary(&self.0, &state.0).map(PyPureState).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("JonesUnitary({:?})", self.matrix())
    }
}

#[pyfunction]
fn hwp(theta: f64) -> PyJonesUnitary {
    PyJonesUnitary(quantum::hwp(theta))
}

#[pyfunction]
fn qwp(theta: f64) -> PyJonesUnitary {
    PyJonesUnitary(quantum::qwp(theta))
}

/// |⟨a|b⟩|²
#[pyfunction]
fn overlap(a: &PyPureState, b: &PyPureState) -> PyResult<f64> {
    quantum::overlap(&a.0, &b.0).map_err(value_err)
}

#[pyfunction]
fn root_fidelity(a: &PyPureState, b: &PyPureState) -> PyResult<f64> {
    quantum::root_fidelity(&a.0, &b.0).map_err(value_err)
}

#[pyfunction]
fn bloch_coords(s: &PyPureState) -> PyResult<(f64, f64, f64)> {
    quantum::bloch_coords(&s.0).map(|[x, y, z]| (x, y, z)).map_err(value_err)
}

/// Coincidence probability `(1 − f)/2` for overlap `f`.
#[pyfunction]
fn coincidence_prob(f: f64) -> PyResult<f64> {
    coincidence_prob_dip(f).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (weights, sigma, psi, phi, tau=0.0))]
fn coincidence_prob_multiphase(weights: Vec<f64>, sigma: f64, psi: Vec<f64>, phi: Vec<f64>, tau: f64) -> PyResult<f64> {
    let scene = PhaseScene::new(weights, sigma, psi, phi).map_err(value_err)?;
    prob_multiphase(&scene, tau).map_err(value_err)
}

fn model(mode: &str, pairs: u64, background: f64) -> PyResult<HomMeasurementModel> {
    match mode {
        "analytic" => Ok(HomMeasurementModel::analytic()),
        "sampled" => HomMeasurementModel::sampled(pairs, background, 0).map_err(value_err),
        other => Err(PyValueError::new_err(format!("mode {other:?} is not analytic|sampled"))),
    }
}

/// Learns `target` from `initial` (default |V⟩). Returns mean/std fidelity
/// per iteration and the final states.
#[pyfunction]
#[pyo3(signature = (target, initial=None, iterations=20, trials=100, seed=0, mode="analytic", pairs_per_setting=1000, background_rate=0.0))]
#[allow(clippy::too_many_arguments)]
fn learn_state<'py>(
    py: Python<'py>,
    target: &PyPureState,
    initial: Option<&PyPureState>,
    iterations: usize,
    trials: usize,
    seed: u64,
    mode: &str,
    pairs_per_setting: u64,
    background_rate: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut task = StateLearningTask::new(target.0.clone());
    if let Some(i) = initial {
        task.initial = i.0.clone();
    }
    task.model = model(mode, pairs_per_setting, background_rate)?;
    task.iterations = iterations;
    task.trials = trials;
    task.master_seed = seed;
    let out = py.detach(|| sgqgan::learn(&task)).map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("mean", &out.trajectory.mean)?;
    d.set_item("std", &out.trajectory.std)?;
    d.set_item("final_states", out.final_states().into_iter().map(PyPureState).collect::<Vec<_>>())?;
    Ok(d)
}

/// Multiphase estimation on uniform random scenes of `n` phases.
#[pyfunction]
#[pyo3(signature = (n, iterations=2000, trials=50, seed=0, sigma=1.0))]
fn estimate_phases<'py>(
    py: Python<'py>,
    n: usize,
    iterations: usize,
    trials: usize,
    seed: u64,
    sigma: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut task = PhaseEstimationTask::new(SceneSource::Uniform { n, sigma });
    task.iterations = iterations;
    task.trials = trials;
    task.master_seed = seed;
    let out = py.detach(|| sgqgan::estimate(&task)).map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("mean", &out.trajectory.mean)?;
    d.set_item("std", &out.trajectory.std)?;
    d.set_item("psi", out.trials.iter().map(|t| t.scene.psi().to_vec()).collect::<Vec<_>>())?;
    d.set_item("phi", out.trials.iter().map(|t| t.final_phi.clone()).collect::<Vec<_>>())?;
    Ok(d)
}

/// Characterizes a hidden unitary through H, D, R probes.
#[pyfunction]
#[pyo3(signature = (process, iterations=30, trials=1, seed=0))]
fn characterize<'py>(
    py: Python<'py>,
    process: &PyJonesUnitary,
    iterations: usize,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut template = StateLearningTask::new(CoreState::vertical());
    template.iterations = iterations;
    template.trials = trials;
    template.master_seed = seed;
    let hidden = process.0;
    let ch = py
        .detach(|| sgqgan::characterize(&BlackBoxProcess::new(hidden), &default_probes(), &template))
        .map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("process_fidelity", process_fidelity(&ch.unitary, &hidden))?;
    d.set_item("chi", ch.process.to_json().to_string())?;
    d.set_item("chi_eigenvalues", ch.process.eigenvalues())?;
    d.set_item("unitary", PyJonesUnitary(ch.unitary))?;
    Ok(d)
}

/// Runs a JSON config exactly like the CLI; returns the summary.
#[pyfunction]
#[pyo3(signature = (config_json, output=None))]
fn run_config<'py>(py: Python<'py>, config_json: &str, output: Option<String>) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = parse_config(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    if let Some(o) = output {
        cfg.output = o;
    }
    let s = py.detach(|| execute(&cfg)).map_err(|e| runtime_err(e.diagnostics().join("; ")))?;
    let d = PyDict::new(py);
    d.set_item("final_mean", s.final_mean)?;
    d.set_item("final_std", s.final_std)?;
    d.set_item("files", s.files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>())?;
    Ok(d)
}

#[pymodule]
fn sgqgan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPureState>()?;
    m.add_class::<PyJonesUnitary>()?;
    m.add_function(wrap_pyfunction!(hwp, m)?)?;
    m.add_function(wrap_pyfunction!(qwp, m)?)?;
    m.add_function(wrap_pyfunction!(overlap, m)?)?;
    m.add_function(wrap_pyfunction!(root_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(bloch_coords, m)?)?;
    m.add_function(wrap_pyfunction!(coincidence_prob, m)?)?;
    m.add_function(wrap_pyfunction!(coincidence_prob_multiphase, m)?)?;
    m.add_function(wrap_pyfunction!(learn_state, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_phases, m)?)?;
    m.add_function(wrap_pyfunction!(characterize, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
