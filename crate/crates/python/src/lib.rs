//! Python bindings for the noma-lpwa core.
//!
//! Strategies, receiver models and order constraints are passed by their
//! command-line names (`"roundrobin"`, `"unfair"`, `"noma_sic"`, ...).
//!
//!     import pynoma
//!     profile = pynoma.RadioProfile()
//!     dep = pynoma.Deployment.generate(100, seed=1, profile=profile)
//!     alloc = pynoma.allocate_channels(dep, 8)
//!     alloc = pynoma.allocate_times(alloc, dep, profile, "unfair")
//!     report = pynoma.evaluate("noma_sic", [profile.p_max_mw] * 100, alloc, dep, profile)

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use noma_lpwa::experiment::{self, compare_strategies, ExperimentConfig, Metric, ResultRow, Selector};
use noma_lpwa::power::{self, Feasibility};
use noma_lpwa::time_alloc::{self, TimeStrategy};
use noma_lpwa::{clustering, interference, network, radio, rng, Error};

pyo3::create_exception!(pynoma, StructurallyInfeasibleError, PyValueError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::StructurallyInfeasible { .. } => StructurallyInfeasibleError::new_err(e.to_string()),
        Error::NumericalFailure { .. } => PyRuntimeError::new_err(e.to_string()),
        Error::Io { .. } | Error::Csv { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// Radio constants: noise floor, per-SF airtime and sensitivity.
#[pyclass(frozen, skip_from_py_object, module = "pynoma")]
#[derive(Clone)]
struct RadioProfile {
    inner: radio::RadioProfile,
}

#[pymethods]
impl RadioProfile {
    #[new]
    #[pyo3(signature = (
        bandwidth_hz = 125e3,
        sf_values = vec![7, 8, 9, 10, 11, 12],
        payload_bits = 70.0,
        noise_figure_db = 6.0,
        demod_snr_db = None,
        p_min_dbm = 0.0,
        p_max_dbm = 20.0,
    ))]
    fn new(
        bandwidth_hz: f64,
        sf_values: Vec<u32>,
        payload_bits: f64,
        noise_figure_db: f64,
        demod_snr_db: Option<Vec<f64>>,
        p_min_dbm: f64,
        p_max_dbm: f64,
    ) -> PyResult<Self> {
        let params = radio::RadioParams {
            bandwidth_hz,
            sf_values,
            payload_bits,
            noise_figure_db,
            demod_snr_db,
            p_min_dbm,
            p_max_dbm,
        };
        Ok(RadioProfile {
            inner: radio::RadioProfile::new(params).map_err(py_err)?,
        })
    }

    #[getter]
    fn noise_mw(&self) -> f64 {
        self.inner.noise_mw()
    }

    #[getter]
    fn times_s(&self) -> Vec<f64> {
        self.inner.times_s().to_vec()
    }

    #[getter]
    fn thresholds_mw(&self) -> Vec<f64> {
        self.inner.thresholds_mw().to_vec()
    }

    #[getter]
    fn sf_values(&self) -> Vec<u32> {
        self.inner.sf_values().to_vec()
    }

    #[getter]
    fn p_min_mw(&self) -> f64 {
        self.inner.p_min_mw()
    }

    #[getter]
    fn p_max_mw(&self) -> f64 {
        self.inner.p_max_mw()
    }

    #[getter]
    fn bandwidth_hz(&self) -> f64 {
        self.inner.bandwidth_hz()
    }

    /// The audit table printed by `noma-lpwa print-profile`.
    fn audit(&self) -> String {
        self.inner.audit().to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "RadioProfile(bandwidth_hz={}, sf_values={:?}, noise_dbm={:.3})",
            self.inner.bandwidth_hz(),
            self.inner.sf_values(),
            radio::mw_to_dbm(self.inner.noise_mw())
        )
    }
}

/// One random network instance.
#[pyclass(frozen, skip_from_py_object, module = "pynoma")]
#[derive(Clone)]
struct Deployment {
    inner: network::Deployment,
}

#[pymethods]
impl Deployment {
    /// Draws a deployment over a disc of `radius_m` around the gateway.
    #[staticmethod]
    #[pyo3(signature = (
        node_count,
        seed = 0,
        profile = None,
        radius_m = 1000.0,
        channel_count = 8,
        path_loss_exponent = 3.5,
        path_loss_constant = 1.0,
        min_distance_m = 1.0,
        fading = "independent",
    ))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        node_count: usize,
        seed: u64,
        profile: Option<&RadioProfile>,
        radius_m: f64,
        channel_count: usize,
        path_loss_exponent: f64,
        path_loss_constant: f64,
        min_distance_m: f64,
        fading: &str,
    ) -> PyResult<Self> {
        let profile = profile.map_or_else(radio::RadioProfile::lora_default, |p| p.inner.clone());
        let config = network::NetworkConfig {
            node_count,
            radius_m,
            channel_count,
            time_slot_count: profile.time_count(),
            path_loss_exponent,
            path_loss_constant,
            min_distance_m,
            fading: parse(fading)?,
            rng_seed: seed,
        };
        Ok(Deployment {
            inner: network::generate_deployment(&config, &profile).map_err(py_err)?,
        })
    }

    /// Builds a deployment from explicit distances and a `K x N` fading matrix.
    #[staticmethod]
    #[pyo3(signature = (distances_m, fading, profile = None, path_loss_exponent = 3.5, path_loss_constant = 1.0))]
    fn from_parts(
        distances_m: Vec<f64>,
        fading: Vec<Vec<f64>>,
        profile: Option<&RadioProfile>,
        path_loss_exponent: f64,
        path_loss_constant: f64,
    ) -> PyResult<Self> {
        let profile = profile.map_or_else(radio::RadioProfile::lora_default, |p| p.inner.clone());
        let config = network::NetworkConfig {
            node_count: distances_m.len(),
            channel_count: fading.len(),
            path_loss_exponent,
            path_loss_constant,
            ..network::NetworkConfig::default()
        };
        Ok(Deployment {
            inner: network::Deployment::from_parts(distances_m, fading, &config, &profile).map_err(py_err)?,
        })
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn channel_count(&self) -> usize {
        self.inner.channel_count()
    }

    #[getter]
    fn distances_m(&self) -> Vec<f64> {
        self.inner.distances_m().to_vec()
    }

    #[getter]
    fn fading(&self) -> Vec<Vec<f64>> {
        self.inner.fading().to_vec()
    }

    /// Linear power gains, `gains[k][n]`.
    #[getter]
    fn gains(&self) -> Vec<Vec<f64>> {
        self.inner.gains().to_vec()
    }

    #[getter]
    fn noise_mw(&self) -> f64 {
        self.inner.noise_mw()
    }

    /// `g[k][n] / sigma^2`.
    fn normalized_gain(&self, k: usize, n: usize) -> PyResult<f64> {
        self.inner.normalized_gain(k, n).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.node_count()
    }
}

/// Channel map, time map and per-channel decode order.
#[pyclass(frozen, skip_from_py_object, module = "pynoma")]
#[derive(Clone)]
struct Allocation {
    inner: clustering::Allocation,
}

#[pymethods]
impl Allocation {
    #[getter]
    fn channel_of(&self) -> Vec<usize> {
        self.inner.channel_of().to_vec()
    }

    /// Time index per node, or `None` before time allocation.
    #[getter]
    fn time_of(&self) -> Option<Vec<usize>> {
        self.inner.time_of().map(<[usize]>::to_vec)
    }

    /// Members of each channel in decode order.
    #[getter]
    fn channel_orders(&self) -> Vec<Vec<usize>> {
        self.inner.channel_orders().to_vec()
    }

    #[getter]
    fn fair_fallback(&self) -> bool {
        self.inner.fair_fallback()
    }

    fn channel_counts(&self) -> Vec<usize> {
        self.inner.channel_counts()
    }

    /// `counts[k][f]`: nodes on channel `k` with time index `f`.
    fn cluster_counts(&self, time_count: usize) -> PyResult<Vec<Vec<usize>>> {
        self.inner.cluster_counts(time_count).map_err(py_err)
    }
}

/// Assigns channels by `strategy`: `roundrobin` or `random`.
#[pyfunction]
#[pyo3(signature = (deployment, channel_count, strategy = "roundrobin", seed = 0, rank_by = "mean"))]
fn allocate_channels(
    deployment: &Deployment,
    channel_count: usize,
    strategy: &str,
    seed: u64,
    rank_by: &str,
) -> PyResult<Allocation> {
    let inner = match strategy {
        "roundrobin" => clustering::allocate_channels_roundrobin(&deployment.inner, channel_count, parse(rank_by)?),
        "random" => clustering::allocate_channels_random(
            &deployment.inner,
            channel_count,
            &mut rng::stream(seed, rng::STREAM_CHANNELS),
        ),
        other => return Err(PyValueError::new_err(format!("unknown channel strategy {other:?}"))),
    }
    .map_err(py_err)?;
    Ok(Allocation { inner })
}

/// Assigns transmission times: `unfair`, `fair`, `random` or `distance`.
#[pyfunction]
#[pyo3(signature = (allocation, deployment, profile, strategy = "unfair", seed = 0, radius_m = 1000.0))]
fn allocate_times(
    allocation: &Allocation,
    deployment: &Deployment,
    profile: &RadioProfile,
    strategy: &str,
    seed: u64,
    radius_m: f64,
) -> PyResult<Allocation> {
    let strategy: TimeStrategy = parse(strategy)?;
    let inner = time_alloc::allocate_times(
        strategy,
        &allocation.inner,
        &deployment.inner,
        radius_m,
        &profile.inner,
        &mut rng::stream(seed, rng::STREAM_TIMES),
    )
    .map_err(py_err)?;
    Ok(Allocation { inner })
}

/// Rates under a receiver model (`noma_sic`, `plain` or `oma`). Returns a
/// dict with `sinr`, `rate`, `min_rate`, `mean_rate` and `channel_min`.
#[pyfunction]
fn evaluate<'py>(
    py: Python<'py>,
    model: &str,
    powers_mw: Vec<f64>,
    allocation: &Allocation,
    deployment: &Deployment,
    profile: &RadioProfile,
) -> PyResult<Bound<'py, PyDict>> {
    let model: interference::ReceiverModel = parse(model)?;
    let r = interference::evaluate(model, &powers_mw, &allocation.inner, &deployment.inner, &profile.inner)
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("model", r.model.name())?;
    d.set_item("min_rate", r.min_rate)?;
    d.set_item("mean_rate", r.mean_rate())?;
    d.set_item("sinr", r.sinr)?;
    d.set_item("rate", r.rate)?;
    d.set_item("channel_min", r.channel_min)?;
    Ok(d)
}

/// Max-min rate power control for one channel.
#[pyclass(frozen, module = "pynoma")]
struct PowerProblem {
    inner: power::PowerProblem,
}

fn power_options(order: &str, epsilon: f64) -> PyResult<power::PowerOptions> {
    Ok(power::PowerOptions {
        order: parse(order)?,
        epsilon,
        ..power::PowerOptions::default()
    })
}

fn solution_dict<'py>(py: Python<'py>, s: &power::PowerSolution) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("channel", s.channel)?;
    d.set_item("nodes", s.nodes.clone())?;
    d.set_item("powers_mw", s.powers_mw.clone())?;
    d.set_item("tau_star", s.tau_star)?;
    d.set_item("tau_upper", s.tau_upper)?;
    d.set_item("iterations", s.iterations)?;
    Ok(d)
}

#[pymethods]
impl PowerProblem {
    /// Members must be listed in decode order (descending normalized gain).
    #[new]
    #[pyo3(signature = (
        gains, thresholds_mw, time_idx, times_s, noise_mw,
        p_min_mw = 1.0, p_max_mw = 100.0, bandwidth_hz = 125e3,
        order = "literal", epsilon = 1e-6,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        gains: Vec<f64>,
        thresholds_mw: Vec<f64>,
        time_idx: Vec<usize>,
        times_s: Vec<f64>,
        noise_mw: f64,
        p_min_mw: f64,
        p_max_mw: f64,
        bandwidth_hz: f64,
        order: &str,
        epsilon: f64,
    ) -> PyResult<Self> {
        let nodes = (0..gains.len()).collect();
        let inner = power::PowerProblem::new(
            0,
            nodes,
            gains,
            thresholds_mw,
            time_idx,
            times_s,
            noise_mw,
            p_min_mw,
            p_max_mw,
            bandwidth_hz,
            power_options(order, epsilon)?,
        )
        .map_err(py_err)?;
        Ok(PowerProblem { inner })
    }

    /// The members of `channel` under a time-allocated `allocation`.
    #[staticmethod]
    #[pyo3(signature = (channel, allocation, deployment, profile, order = "literal", epsilon = 1e-6))]
    fn from_allocation(
        channel: usize,
        allocation: &Allocation,
        deployment: &Deployment,
        profile: &RadioProfile,
        order: &str,
        epsilon: f64,
    ) -> PyResult<Self> {
        let inner = power::PowerProblem::from_allocation(
            channel,
            &allocation.inner,
            &deployment.inner,
            &profile.inner,
            power_options(order, epsilon)?,
        )
        .map_err(py_err)?;
        Ok(PowerProblem { inner })
    }

    #[getter]
    fn nodes(&self) -> Vec<usize> {
        self.inner.nodes().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn tau_upper_bound(&self) -> f64 {
        self.inner.tau_upper_bound()
    }

    /// Least powers meeting rate target `tau`, or `None` when infeasible.
    fn feasibility_solve(&self, tau: f64) -> PyResult<Option<Vec<f64>>> {
        Ok(match self.inner.feasibility_solve(tau).map_err(py_err)? {
            Feasibility::Feasible(p) => Some(p),
            Feasibility::Infeasible => None,
        })
    }

    fn maximize_min_rate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.maximize_min_rate().map_err(py_err)?;
        solution_dict(py, &s)
    }

    fn rates(&self, powers_mw: Vec<f64>) -> Vec<f64> {
        self.inner.rates(&powers_mw)
    }

    fn min_rate(&self, powers_mw: Vec<f64>) -> f64 {
        self.inner.min_rate(&powers_mw)
    }
}

/// Optimal powers for every channel. Returns `(powers_mw, tau_star)`.
#[pyfunction]
#[pyo3(signature = (allocation, deployment, profile, order = "literal", epsilon = 1e-6))]
fn optimize_powers(
    allocation: &Allocation,
    deployment: &Deployment,
    profile: &RadioProfile,
    order: &str,
    epsilon: f64,
) -> PyResult<(Vec<f64>, f64)> {
    let np = power::optimize_powers(
        &allocation.inner,
        &deployment.inner,
        &profile.inner,
        power_options(order, epsilon)?,
    )
    .map_err(py_err)?;
    let tau = np.tau_star();
    Ok((np.powers_mw, tau))
}

fn row_dict<'py>(py: Python<'py>, r: &ResultRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("nodes", r.nodes)?;
    d.set_item("trial", r.trial)?;
    d.set_item("seed", r.seed)?;
    d.set_item("channel_strategy", r.combo.channel.name())?;
    d.set_item("time_strategy", r.combo.time.name())?;
    d.set_item("power_strategy", r.combo.power.name())?;
    d.set_item("model", r.combo.model.name())?;
    d.set_item("status", r.status.name())?;
    d.set_item("min_rate", r.min_rate)?;
    d.set_item("mean_rate", r.mean_rate)?;
    d.set_item("channel_min", r.channel_min.clone())?;
    d.set_item("fair_fallback", r.fair_fallback)?;
    d.set_item("note", r.note.clone())?;
    d.set_item("wall_time_s", r.wall_time.as_secs_f64())?;
    Ok(d)
}

fn build_config(settings: Option<&Bound<'_, PyDict>>) -> PyResult<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    if let Some(settings) = settings {
        for (k, v) in settings.iter() {
            let key: String = k.extract()?;
            let value = match v.extract::<Vec<Bound<'_, PyAny>>>() {
                Ok(items) if !v.is_instance_of::<pyo3::types::PyString>() => items
                    .iter()
                    .map(|x| x.str().map(|s| s.to_string()))
                    .collect::<PyResult<Vec<_>>>()?
                    .join(","),
                _ => v.str()?.to_string(),
            };
            config.set(&key, &value).map_err(py_err)?;
        }
    }
    config.validate().map_err(py_err)?;
    Ok(config)
}

/// Runs a sweep. `settings` uses the config-file keys, e.g.
/// `{"nodes": [100, 500], "trials": 20, "time-strategy": "unfair,fair"}`.
/// Returns the trial rows as dicts; when `out` is given the CSV and JSON
/// sidecar are written too.
#[pyfunction]
#[pyo3(signature = (settings = None, out = None))]
fn run_experiment<'py>(
    py: Python<'py>,
    settings: Option<&Bound<'py, PyDict>>,
    out: Option<PathBuf>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let config = build_config(settings)?;
    let started = std::time::Instant::now();
    let table = py.detach(|| match &out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let mut sink = experiment::CsvSink::new(std::io::BufWriter::new(file), path, config.seed)?;
            let table = experiment::run_experiment_with(&config, |p| sink.write_point(p))?;
            sink.into_inner()?;
            experiment::write_metadata(path, &config, &table.points, started.elapsed())?;
            Ok(table)
        }
        None => experiment::run_experiment(&config),
    });
    let table = table.map_err(py_err)?;
    table.rows().map(|r| row_dict(py, r)).collect()
}

/// Every key accepted in `run_experiment` settings.
#[pyfunction]
fn config_keys() -> Vec<&'static str> {
    experiment::config::KEYS.to_vec()
}

/// Paired comparison of two strategies over result CSV files. Selectors
/// look like `"time=unfair"`.
#[pyfunction]
#[pyo3(signature = (paths, a, b, metric = "min_rate"))]
fn compare<'py>(
    py: Python<'py>,
    paths: Vec<PathBuf>,
    a: &str,
    b: &str,
    metric: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut rows = Vec::new();
    for p in &paths {
        rows.extend(experiment::read_trial_rows(p).map_err(py_err)?);
    }
    let a: Selector = parse(a)?;
    let b: Selector = parse(b)?;
    let metric: Metric = parse(metric)?;
    let summaries = compare_strategies(&rows, &a, &b, metric).map_err(py_err)?;
    summaries
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("nodes", s.nodes)?;
            d.set_item("context", s.context.clone())?;
            d.set_item("pairs", s.pairs)?;
            d.set_item("skipped", s.skipped)?;
            d.set_item("mean_a", s.mean_a)?;
            d.set_item("mean_b", s.mean_b)?;
            d.set_item("mean_diff", s.mean_diff)?;
            d.set_item("mean_db", s.mean_db)?;
            d.set_item("db_of_means", s.db_of_means)?;
            d.set_item("wins_a", s.wins_a)?;
            d.set_item("wins_b", s.wins_b)?;
            d.set_item("ties", s.ties)?;
            d.set_item("p_value", s.p_value)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
fn dbm_to_mw(dbm: f64) -> f64 {
    radio::dbm_to_mw(dbm)
}

#[pyfunction]
fn mw_to_dbm(mw: f64) -> f64 {
    radio::mw_to_dbm(mw)
}

/// Thermal noise power in mW for a bandwidth and noise figure.
#[pyfunction]
fn noise_variance(bandwidth_hz: f64, noise_figure_db: f64) -> PyResult<f64> {
    radio::noise_variance(bandwidth_hz, noise_figure_db).map_err(py_err)
}

/// Airtime in seconds of a `payload_bits` frame at spreading factor `sf`.
#[pyfunction]
fn transmission_time(sf: u32, payload_bits: f64, bandwidth_hz: f64) -> f64 {
    radio::transmission_time(sf, payload_bits, bandwidth_hz)
}

#[pyfunction]
fn collision_factor(desired_s: f64, interferer_s: f64) -> f64 {
    interference::collision_factor(desired_s, interferer_s)
}

#[pymodule]
fn pynoma(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("StructurallyInfeasibleError", m.py().get_type::<StructurallyInfeasibleError>())?;
    m.add_class::<RadioProfile>()?;
    m.add_class::<Deployment>()?;
    m.add_class::<Allocation>()?;
    m.add_class::<PowerProblem>()?;
    m.add_function(wrap_pyfunction!(allocate_channels, m)?)?;
    m.add_function(wrap_pyfunction!(allocate_times, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_powers, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(config_keys, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(dbm_to_mw, m)?)?;
    m.add_function(wrap_pyfunction!(mw_to_dbm, m)?)?;
    m.add_function(wrap_pyfunction!(noise_variance, m)?)?;
    m.add_function(wrap_pyfunction!(transmission_time, m)?)?;
    m.add_function(wrap_pyfunction!(collision_factor, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
