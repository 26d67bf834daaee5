use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ::pecthresh as core;
use core::circuit::{self, DisorderMode, TopologyKind};
use core::experiments::{self, EnsembleResult};
use core::meanfield::{self, MeanFieldParams};
use core::replica::{self, Region};

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn disorder_mode(mode: &str) -> PyResult<DisorderMode> {
    match mode {
        "spacetime" => Ok(DisorderMode::Spacetime),
        "quenched" => Ok(DisorderMode::Quenched),
        _ => Err(PyValueError::new_err(format!("unknown disorder mode {mode:?}"))),
    }
}

type Row = (usize, f64, usize, f64, f64, f64, usize, usize);

fn row(r: &EnsembleResult) -> Row {
    (r.key.n, r.key.ratio, r.key.depth, r.mean, r.std, r.stderr, r.count, r.non_finite)
}

/// Replica weight vector over {I, S}^N.
#[pyclass(name = "ReplicaState", module = "pecthresh")]
struct PyReplicaState {
    inner: replica::ReplicaState,
}

#[pymethods]
impl PyReplicaState {
    #[staticmethod]
    fn haar(n: usize) -> PyResult<Self> {
        Ok(Self { inner: replica::ReplicaState::init_haar_global(n).map_err(err)? })
    }

    #[staticmethod]
    fn product(n: usize) -> PyResult<Self> {
        Ok(Self { inner: replica::ReplicaState::init_product_state(n).map_err(err)? })
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.weights().into_owned()
    }

    fn apply_gate(&mut self, i: usize, j: usize) -> PyResult<()> {
        self.inner.apply_gate(i, j).map_err(err)
    }

    fn apply_noise(&mut self, site: usize, q: f64) -> PyResult<()> {
        self.inner.apply_noise(site, q).map_err(err)
    }

    fn apply_antinoise(&mut self, site: usize, q_a: f64) -> PyResult<()> {
        self.inner.apply_antinoise(site, q_a).map_err(err)
    }

    /// Gates on `pairs`, then noise at `rates` and antinoise `q_a` on every site.
    fn step_layer(&mut self, pairs: Vec<(usize, usize)>, rates: Vec<f64>, q_a: f64) -> PyResult<()> {
        self.inner.step_layer(&pairs, &rates, q_a).map_err(err)
    }

    fn trace(&self) -> f64 {
        self.inner.trace()
    }

    fn avg_purity(&self, sites: Vec<usize>) -> PyResult<f64> {
        self.inner.avg_purity(&Region::new(sites)).map_err(err)
    }

    fn correlation_metric(&self, a: usize, b: usize) -> PyResult<f64> {
        self.inner.correlation_metric(a, b).map_err(err)
    }

    fn renyi2_probe(&self, site: usize) -> PyResult<f64> {
        self.inner.renyi2_probe(site).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ReplicaState(n_qubits={}, trace={})", self.inner.n_qubits(), self.inner.trace())
    }
}

/// Brickwork layers on a periodic chain as lists of pairs.
#[pyfunction]
fn brickwork_schedule(n: usize, depth: usize) -> PyResult<Vec<Vec<(usize, usize)>>> {
    let s = circuit::build_brickwork_schedule(n, depth).map_err(err)?;
    Ok(s.layers().to_vec())
}

#[pyfunction]
fn zero_mean_field_rate(p: f64, q1: f64, q2: f64) -> f64 {
    circuit::zero_mean_field_rate(p, q1, q2)
}

/// `(sigma, q_bar)` of the two-valued rate distribution.
#[pyfunction]
fn disorder_sigma(p: f64, q1: f64, q2: f64) -> (f64, f64) {
    let m = circuit::disorder_sigma(p, q1, q2);
    (m.sigma, m.q_bar)
}

/// Run a sweep from a TOML config string; rows are
/// `(n, ratio, depth, mean, std, stderr, count, non_finite)`.
#[pyfunction]
fn sweep(py: Python<'_>, config: &str) -> PyResult<Vec<Row>> {
    let spec: core::cli::config::SweepConfig =
        core::cli::config::parse(config, "<string>").map_err(|e| PyValueError::new_err(e.0))?;
    spec.validate().map_err(err)?;
    let rows = py.detach(|| experiments::sweep(&spec)).map_err(err)?;
    Ok(rows.iter().map(row).collect())
}

/// Disorder strength `|Δ_1|` at which the mean-field origin loses stability.
#[pyfunction]
#[pyo3(signature = (j, p=0.5, gamma_a=10.0))]
fn stability_threshold(j: f64, p: f64, gamma_a: f64) -> PyResult<f64> {
    let params = MeanFieldParams::from_delta1(j, 0.0, p, gamma_a, 2).map_err(err)?;
    meanfield::stability_threshold(&params).map_err(err)
}

/// Fixed points `(g_plus, g_minus, largest_eigenvalue_real, stable)`.
#[pyfunction]
#[pyo3(signature = (j, delta1, p=0.5, gamma_a=10.0))]
fn fixed_points(j: f64, delta1: f64, p: f64, gamma_a: f64) -> PyResult<Vec<(f64, f64, f64, bool)>> {
    let params = MeanFieldParams::from_delta1(j, delta1, p, gamma_a, 2).map_err(err)?;
    let fps = meanfield::fixed_points(&params).map_err(err)?;
    Ok(fps.iter().map(|f| (f.g_plus, f.g_minus, f.eigenvalues[0].re, f.stable)).collect())
}

/// Growth fit of `ln Tr rho_2^+` on a quenched chain: `(slope, intercept, r2, region_len)`.
#[pyfunction]
#[pyo3(signature = (n, p, q1, q2, d_max, seed=0))]
fn instability(n: usize, p: f64, q1: f64, q2: f64, d_max: usize, seed: u64) -> PyResult<(f64, f64, f64, usize)> {
    let spec = circuit::DisorderSpec::new(p, q1, q2, DisorderMode::Quenched, seed).map_err(err)?;
    let f = experiments::instability_experiment(n, &spec, d_max, replica::InitForm::ProductOnRegion).map_err(err)?;
    Ok((f.slope, f.intercept, f.r2, f.region_len))
}

/// Single-size replica sweep of the chosen probe, for quick exploration.
#[pyfunction]
#[pyo3(signature = (n, ratios, q_bar=0.20, p=0.5, realizations=50, seed=0, topology="all-to-all", disorder="spacetime", probe="renyi2"))]
#[allow(clippy::too_many_arguments)]
fn replica_curve(
    py: Python<'_>,
    n: usize,
    ratios: Vec<f64>,
    q_bar: f64,
    p: f64,
    realizations: usize,
    seed: u64,
    topology: &str,
    disorder: &str,
    probe: &str,
) -> PyResult<Vec<Row>> {
    let topology = match topology {
        "all-to-all" => TopologyKind::AllToAll,
        "chain" | "chain-1d-periodic" => TopologyKind::Chain1dPeriodic,
        _ => return Err(PyValueError::new_err(format!("unknown topology {topology:?}"))),
    };
    let probe = match probe {
        "renyi2" => experiments::Probe::Renyi2,
        "correlation-metric" => experiments::Probe::CorrelationMetric,
        "sign-traces" => experiments::Probe::SignTraces,
        "fidelity" => experiments::Probe::Fidelity,
        _ => return Err(PyValueError::new_err(format!("unknown replica probe {probe:?}"))),
    };
    let spec = experiments::SweepSpec {
        engine: experiments::Engine::Replica,
        topology,
        disorder: disorder_mode(disorder)?,
        depth: experiments::DepthRule::default(),
        p,
        q_bar,
        ratios,
        sizes: vec![n],
        realizations,
        seed,
        probe,
        initial: experiments::InitialState::Haar,
    };
    spec.validate().map_err(err)?;
    let rows = py.detach(|| experiments::sweep(&spec)).map_err(err)?;
    Ok(rows.iter().map(row).collect())
}

#[pymodule]
fn pecthresh(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyReplicaState>()?;
    m.add_function(wrap_pyfunction!(brickwork_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(zero_mean_field_rate, m)?)?;
    m.add_function(wrap_pyfunction!(disorder_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(stability_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_points, m)?)?;
    m.add_function(wrap_pyfunction!(instability, m)?)?;
    m.add_function(wrap_pyfunction!(replica_curve, m)?)?;
    Ok(())
}
