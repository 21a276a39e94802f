//! Python module `exitsim`.

use std::collections::HashMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use exitsim::exit_time::{partition_rates, sample_exit_time as sample_groups};
use exitsim::harness::{self, Method, DEFAULT_BINS};
use exitsim::hypoexp::{ErlangDistribution, HypoexpDistribution};
use exitsim::model::{self, SystemState};
use exitsim::ssa::{self, TrajectoryStatus};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn positive(name: &str, x: f64) -> PyResult<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(PyValueError::new_err(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

/// A reaction network with its initial state and exit condition.
#[pyclass(name = "Model", module = "exitsim", frozen)]
struct PyModel {
    inner: model::Model,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        model::Model::from_json(text)
            .map(|inner| PyModel { inner })
            .map_err(value_error)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        model::Model::load(path)
            .map(|inner| PyModel { inner })
            .map_err(value_error)
    }

    /// The bundled SIR network.
    #[staticmethod]
    fn sir() -> Self {
        PyModel {
            inner: model::sir_reference(),
        }
    }

    #[getter]
    fn species(&self) -> Vec<String> {
        self.inner
            .system
            .species()
            .iter()
            .map(|s| s.name.clone())
            .collect()
    }

    #[getter]
    fn omega(&self) -> u64 {
        self.inner.system.omega()
    }

    #[getter]
    fn initial(&self) -> Vec<u64> {
        self.inner.initial.counts.clone()
    }

    fn propensities(&self, counts: Vec<u64>) -> PyResult<Vec<f64>> {
        let state = self.state(counts)?;
        let mut out = vec![0.0; self.inner.system.reactions().len()];
        self.inner.system.fill_propensities(&state, &mut out);
        Ok(out)
    }

    fn total_propensity(&self, counts: Vec<u64>) -> PyResult<f64> {
        let state = self.state(counts)?;
        Ok(self.inner.system.total_propensity(&state))
    }

    fn exit_met(&self, counts: Vec<u64>) -> PyResult<bool> {
        let state = self.state(counts)?;
        Ok(self.inner.exit.is_met(&state))
    }
}

impl PyModel {
    fn state(&self, counts: Vec<u64>) -> PyResult<SystemState> {
        let n = self.inner.system.n_species();
        if counts.len() != n {
            return Err(PyValueError::new_err(format!(
                "expected {n} species counts, got {}",
                counts.len()
            )));
        }
        Ok(SystemState::new(counts))
    }
}

/// Counter-based random stream identified by (seed, stream_id).
#[pyclass(name = "RandomStream", module = "exitsim")]
struct PyRandomStream {
    inner: exitsim::RandomStream,
}

#[pymethods]
impl PyRandomStream {
    #[new]
    fn new(seed: u64, stream_id: u64) -> Self {
        PyRandomStream {
            inner: exitsim::RandomStream::new(seed, stream_id),
        }
    }

    fn uniform(&mut self) -> f64 {
        self.inner.uniform()
    }

    fn exponential(&mut self, rate: f64) -> PyResult<f64> {
        Ok(self.inner.exponential(positive("rate", rate)?))
    }

    fn gamma(&mut self, scale: f64, shape: u64) -> PyResult<f64> {
        if shape == 0 {
            return Err(PyValueError::new_err("shape must be at least 1"));
        }
        Ok(self.inner.gamma(positive("scale", scale)?, shape))
    }

    fn counters(&self) -> HashMap<&'static str, u64> {
        counters_dict(self.inner.counters())
    }
}

fn counters_dict(c: exitsim::RngCounters) -> HashMap<&'static str, u64> {
    HashMap::from([
        ("uniform", c.uniform),
        ("exponential", c.exponential),
        ("gamma", c.gamma),
    ])
}

/// Result of a single trajectory.
#[pyclass(name = "Trajectory", module = "exitsim", frozen, get_all)]
struct PyTrajectory {
    /// "exited", "absorbed" or "step_limit".
    status: &'static str,
    exit_time: Option<f64>,
    steps: u64,
    propensity_log: Option<Vec<f64>>,
    final_counts: Vec<u64>,
}

fn trajectory(m: &PyModel, seed: u64, stream_id: u64, timed: bool) -> PyResult<PyTrajectory> {
    let mut stream = exitsim::RandomStream::new(seed, stream_id);
    let (system, initial, exit) = (&m.inner.system, &m.inner.initial, &m.inner.exit);
    let outcome = if timed {
        ssa::run_ssa(system, initial, exit, &mut stream)
    } else {
        ssa::run_timefree(system, initial, exit, &mut stream)
    }
    .map_err(value_error)?;
    Ok(PyTrajectory {
        status: match outcome.status {
            TrajectoryStatus::Exited => "exited",
            TrajectoryStatus::Absorbed => "absorbed",
            TrajectoryStatus::StepLimit => "step_limit",
        },
        exit_time: outcome.exit_time,
        steps: outcome.steps,
        propensity_log: outcome.propensity_log.map(|l| l.lambdas().to_vec()),
        final_counts: outcome.final_state.counts,
    })
}

/// Classical simulation until the exit condition holds.
#[pyfunction]
#[pyo3(signature = (model, seed, stream_id = 0))]
fn run_ssa(model: &PyModel, seed: u64, stream_id: u64) -> PyResult<PyTrajectory> {
    trajectory(model, seed, stream_id, true)
}

/// Same jump chain as `run_ssa`, without time; records the total propensities.
#[pyfunction]
#[pyo3(signature = (model, seed, stream_id = 0))]
fn run_timefree(model: &PyModel, seed: u64, stream_id: u64) -> PyResult<PyTrajectory> {
    trajectory(model, seed, stream_id, false)
}

fn check_epsilon(epsilon: f64) -> PyResult<()> {
    if epsilon >= 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(PyValueError::new_err(format!(
            "epsilon must be >= 0, got {epsilon}"
        )))
    }
}

fn check_rates(lambdas: &[f64]) -> PyResult<()> {
    for &l in lambdas {
        positive("rate", l)?;
    }
    Ok(())
}

/// Groups of (lambda_tilde, count) for a propensity log.
#[pyfunction]
fn partition(lambdas: Vec<f64>, epsilon: f64) -> PyResult<Vec<(f64, u64)>> {
    check_epsilon(epsilon)?;
    check_rates(&lambdas)?;
    Ok(partition_rates(&lambdas, epsilon)
        .groups()
        .iter()
        .map(|g| (g.lambda_tilde, g.count))
        .collect())
}

/// One exit-time draw for a propensity log grouped at `epsilon`.
#[pyfunction]
fn sample_exit_time(lambdas: Vec<f64>, epsilon: f64, stream: &mut PyRandomStream) -> PyResult<f64> {
    check_epsilon(epsilon)?;
    check_rates(&lambdas)?;
    Ok(sample_groups(
        &partition_rates(&lambdas, epsilon),
        &mut stream.inner,
    ))
}

/// Sum of independent exponentials with distinct rates.
#[pyclass(name = "Hypoexponential", module = "exitsim", frozen)]
struct PyHypoexp {
    inner: HypoexpDistribution,
}

#[pymethods]
impl PyHypoexp {
    #[new]
    fn new(rates: Vec<f64>) -> PyResult<Self> {
        HypoexpDistribution::new(&rates)
            .map(|inner| PyHypoexp { inner })
            .map_err(value_error)
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients().to_vec()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn pdf(&self, t: f64) -> f64 {
        self.inner.pdf(t)
    }

    fn cdf(&self, t: f64) -> f64 {
        self.inner.cdf(t)
    }

    fn laplace(&self, s: f64) -> f64 {
        self.inner.laplace(s)
    }

    fn inverse(&self, r: f64) -> PyResult<f64> {
        self.inner.inverse(r).map_err(value_error)
    }
}

#[pyfunction]
fn erlang_pdf(rate: f64, shape: u32, t: f64) -> PyResult<f64> {
    Ok(ErlangDistribution::new(rate, shape)
        .map_err(value_error)?
        .pdf(t))
}

fn method_of(method: &str, epsilon: Option<f64>) -> PyResult<Method> {
    match (method, epsilon) {
        ("ssa", None) => Ok(Method::Ssa),
        ("exit", Some(epsilon)) => {
            check_epsilon(epsilon)?;
            Ok(Method::ExitTime { epsilon })
        }
        ("exit", None) => Err(PyValueError::new_err("method 'exit' requires epsilon")),
        ("ssa", Some(_)) => Err(PyValueError::new_err(
            "epsilon only applies to method 'exit'",
        )),
        _ => Err(PyValueError::new_err(format!(
            "method must be 'ssa' or 'exit', got {method:?}"
        ))),
    }
}

/// Exit times of `n` trajectories; censored ones are only counted.
#[pyfunction]
#[pyo3(signature = (model, method, n, seed, epsilon = None, workers = None))]
fn run_ensemble<'py>(
    py: Python<'py>,
    model: &PyModel,
    method: &str,
    n: usize,
    seed: u64,
    epsilon: Option<f64>,
    workers: Option<usize>,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let method = method_of(method, epsilon)?;
    let e = py
        .detach(|| harness::run_ensemble(&model.inner, method, n, seed, workers))
        .map_err(value_error)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("n_exited", e.n_exited())?;
    d.set_item("n_censored", e.n_censored)?;
    d.set_item("counters", counters_dict(e.counters))?;
    d.set_item("exit_times", e.exit_times)?;
    Ok(d)
}

/// SSA on `seed` against the exit-time method on `seed + 1`.
#[pyfunction]
#[pyo3(signature = (model, epsilon, n, seed, bins = DEFAULT_BINS, workers = None))]
fn compare<'py>(
    py: Python<'py>,
    model: &PyModel,
    epsilon: f64,
    n: usize,
    seed: u64,
    bins: usize,
    workers: Option<usize>,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    check_epsilon(epsilon)?;
    let c = py
        .detach(|| harness::compare(&model.inner, epsilon, n, seed, bins, workers))
        .map_err(value_error)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("l1", c.errors.l1)?;
    d.set_item("l2", c.errors.l2)?;
    d.set_item("rho", c.rho)?;
    d.set_item("ssa_seed", c.ssa_seed)?;
    d.set_item("method_seed", c.method.seed)?;
    if let Some(ks) = c.ks {
        d.set_item("ks_statistic", ks.statistic)?;
        d.set_item("ks_critical", ks.critical_value)?;
        d.set_item("ks_equivalent", ks.accepts())?;
    }
    d.set_item("t_mid", c.reference_histogram.grid.midpoints())?;
    d.set_item("density_ssa", c.reference_histogram.densities)?;
    d.set_item("density_method", c.method_histogram.densities)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "exitsim")]
fn exitsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyRandomStream>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyHypoexp>()?;
    m.add_function(wrap_pyfunction!(run_ssa, m)?)?;
    m.add_function(wrap_pyfunction!(run_timefree, m)?)?;
    m.add_function(wrap_pyfunction!(partition, m)?)?;
    m.add_function(wrap_pyfunction!(sample_exit_time, m)?)?;
    m.add_function(wrap_pyfunction!(erlang_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add("DEFAULT_BINS", DEFAULT_BINS)?;
    Ok(())
}
