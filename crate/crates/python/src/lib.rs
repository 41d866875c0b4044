//! Python bindings: configurations, ensembles, whole runs, the collision maps
//! and the analytic bounds. Vectors cross the boundary as 3-tuples; errors
//! surface as `ValueError` (`OSError` for file problems).

use std::fmt::Display;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict, PyList};

use granular_mix::bounds::{self, BoundReport, EnvelopeSpec, PsiKind, PsiSpec};
use granular_mix::cli::config::{parse_config, SimConfig};
use granular_mix::cli::output::series_csv;
use granular_mix::cli::verify::Suite;
use granular_mix::cli::{self, CliError};
use granular_mix::engine::{self, snapshot, Ensemble, Observable, TestFunction};
use granular_mix::kernels::{tau_constant as tau_of, AngularSection, KernelSpec};
use granular_mix::kinematics::{self, CollisionOutcome, SpeciesPair};
use granular_mix::observables;
use granular_mix::rng::aux_stream;
use granular_mix::vector::Vec3;

type V3 = (f64, f64, f64);

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Io(_) => PyOSError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

fn vec3(v: V3) -> Vec3 {
    Vec3::new(v.0, v.1, v.2)
}

fn tuple(v: Vec3) -> V3 {
    (v[0], v[1], v[2])
}

fn pair(m_i: f64, m_j: f64, e: f64) -> PyResult<SpeciesPair> {
    SpeciesPair::new(m_i, m_j, e).map_err(value_err)
}

fn outcome(o: CollisionOutcome) -> (V3, V3, f64) {
    (tuple(o.v_prime), tuple(o.v_star_prime), o.delta_energy)
}

fn report_dict<'py>(py: Python<'py>, r: &BoundReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("name", &r.name)?;
    d.set_item("passed", r.passed)?;
    d.set_item("margin", r.margin)?;
    d.set_item("samples", r.samples)?;
    d.set_item("config_digest", &r.config_digest)?;
    Ok(d)
}

/// A validated run configuration.
#[pyclass(name = "Config", module = "granmix", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: SimConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new(json: &str) -> PyResult<Self> {
        Ok(Self { inner: parse_config(json).map_err(value_err)? })
    }

    /// The built-in hard-sphere binary mixture used by the cooling checks.
    #[staticmethod]
    fn reference() -> Self {
        Self { inner: cli::reference_config() }
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical form; output paths do not contribute.
    fn digest(&self) -> String {
        self.inner.digest()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn steps(&self) -> u64 {
        self.inner.time.steps
    }

    #[setter]
    fn set_steps(&mut self, steps: u64) {
        self.inner.time.steps = steps;
    }

    #[getter]
    fn masses(&self) -> Vec<f64> {
        self.inner.masses()
    }

    #[getter]
    fn restitution(&self) -> f64 {
        self.inner.kernel.e
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(species={}, e={}, steps={}, seed={})",
            self.inner.species.len(),
            self.inner.kernel.e,
            self.inner.time.steps,
            self.inner.seed
        )
    }
}

/// Particle ensemble that can be stepped and measured from Python.
#[pyclass(name = "Ensemble", module = "granmix")]
struct PyEnsemble {
    inner: Ensemble,
    spec: KernelSpec,
    dt: f64,
}

#[pymethods]
impl PyEnsemble {
    /// Draws the initial state of `config`; `seed` defaults to the configured one.
    #[new]
    #[pyo3(signature = (config, seed=None))]
    fn new(config: PyRef<'_, PyConfig>, seed: Option<u64>) -> PyResult<Self> {
        let cfg = &config.inner;
        let spec = cfg.kernel.spec();
        let inner = engine::init_ensemble(cfg, seed.unwrap_or(cfg.seed)).map_err(value_err)?;
        let dt = match cfg.time.dt {
            Some(dt) => dt,
            None => inner.default_dt(&spec).map_err(value_err)?,
        };
        Ok(Self { inner, spec, dt })
    }

    /// Advances `n` steps of size `dt` (default: the configured or automatic
    /// step). Returns the number of accepted collisions.
    #[pyo3(signature = (n=1, dt=None))]
    fn step(&mut self, py: Python<'_>, n: u64, dt: Option<f64>) -> PyResult<u64> {
        let dt = dt.unwrap_or(self.dt);
        let (ens, spec) = (&mut self.inner, &self.spec);
        py.detach(|| {
            let mut accepted = 0;
            for _ in 0..n {
                accepted += engine::step(ens, spec, dt)?.total_accepted();
            }
            Ok::<_, engine::EngineError>(accepted)
        })
        .map_err(value_err)
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.dt
    }

    #[getter]
    fn num_species(&self) -> usize {
        self.inner.num_species()
    }

    fn energy(&self) -> f64 {
        self.inner.energy()
    }

    fn momentum(&self) -> V3 {
        tuple(self.inner.total_momentum())
    }

    fn species_masses(&self) -> Vec<f64> {
        observables::species_masses(&self.inner)
    }

    /// Per-species velocity variance about the species mean.
    fn variances(&self) -> Vec<f64> {
        observables::concentration_metric(&self.inner)
    }

    /// Weighted moment `Y^s`.
    fn moment(&self, s: f64) -> f64 {
        observables::weighted_moment_ys(&self.inner, s)
    }

    /// `(entropy, boldH)` from the nearest-neighbour density, or `None` when a
    /// species is too small or degenerate.
    fn entropy(&self, py: Python<'_>) -> Option<(f64, f64)> {
        let ens = &self.inner;
        py.detach(|| observables::entropy_estimate(ens))
    }

    fn velocities(&self, species: usize) -> PyResult<Vec<V3>> {
        let sp = self.inner.species.get(species).ok_or_else(|| value_err(format!("no species {species}")))?;
        Ok(sp.velocities.iter().map(|v| tuple(*v)).collect())
    }

    /// Exact pair-sum rate of `psi` in channel `(s, r)`. `psi` is "mass",
    /// "energy", "momentum_x", "momentum_y", "momentum_z", "Y<s>" or "mu<k>".
    fn weak_form_rate(&self, py: Python<'_>, psi: &str, channel: (usize, usize)) -> PyResult<f64> {
        let psi = TestFunction::parse(psi).map_err(value_err)?;
        let (ens, spec) = (&self.inner, &self.spec);
        py.detach(|| engine::weak_form_moment_rate(ens, spec, psi, channel)).map_err(value_err)
    }

    /// Flat little-endian snapshot of the current state.
    fn snapshot<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &snapshot::encode(&self.inner))
    }
}

/// Runs `config` and returns the series, CSV text and run summary.
#[pyfunction]
fn run<'py>(py: Python<'py>, config: PyRef<'_, PyConfig>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config.inner.clone();
    let out = py
        .detach(|| engine::run(&cfg, &Observable::standard(&cfg)))
        .map_err(value_err)?;
    let recs = &out.series.records;
    let d = PyDict::new(py);
    d.set_item("times", recs.iter().map(|r| r.time).collect::<Vec<_>>())?;
    d.set_item("energies", recs.iter().map(|r| r.energy).collect::<Vec<_>>())?;
    d.set_item("momenta", recs.iter().map(|r| tuple(r.momentum)).collect::<Vec<_>>())?;
    d.set_item("entropy", recs.iter().map(|r| r.entropy).collect::<Vec<_>>())?;
    d.set_item("variances", recs.iter().map(|r| r.variance_per_species.clone()).collect::<Vec<_>>())?;
    d.set_item("collisions", recs.last().map_or(0, |r| r.collisions))?;
    d.set_item("csv", series_csv(&out.series, cfg.species.len()))?;
    d.set_item("dt", out.resolved.time.dt)?;
    d.set_item("config_digest", &out.series.config_digest)?;
    d.set_item("wall_clock_seconds", out.wall_clock_seconds)?;
    d.set_item("error", &out.error)?;
    let reports = PyList::empty(py);
    for r in cli::run_acceptance(&out) {
        reports.append(report_dict(py, &r)?)?;
    }
    d.set_item("acceptance", reports)?;
    Ok(d)
}

/// Runs the named suites ("kinematics", "povzner", "envelopes", "haff",
/// "entropy") and returns their bound reports.
#[pyfunction]
#[pyo3(signature = (config, suites, samples=100_000))]
fn verify<'py>(
    py: Python<'py>,
    config: PyRef<'_, PyConfig>,
    suites: Vec<String>,
    samples: u64,
) -> PyResult<Bound<'py, PyList>> {
    let parsed = suites
        .iter()
        .map(|s| Suite::parse(s).ok_or_else(|| value_err(format!("unknown suite {s:?}"))))
        .collect::<PyResult<Vec<_>>>()?;
    let cfg = config.inner.clone();
    let reports = py.detach(|| cli::verify_suites(&cfg, &parsed, samples)).map_err(cli_err)?;
    let list = PyList::empty(py);
    for r in &reports {
        list.append(report_dict(py, r)?)?;
    }
    Ok(list)
}

#[pyfunction]
fn post_collision_sigma(v: V3, v_star: V3, sigma: V3, m_i: f64, m_j: f64, e: f64) -> PyResult<(V3, V3, f64)> {
    let p = pair(m_i, m_j, e)?;
    kinematics::post_collision_sigma(&vec3(v), &vec3(v_star), &vec3(sigma), &p).map(outcome).map_err(value_err)
}

#[pyfunction]
fn post_collision_omega(v: V3, v_star: V3, omega: V3, m_i: f64, m_j: f64, e: f64) -> PyResult<(V3, V3, f64)> {
    let p = pair(m_i, m_j, e)?;
    kinematics::post_collision_omega(&vec3(v), &vec3(v_star), &vec3(omega), &p).map(outcome).map_err(value_err)
}

#[pyfunction]
fn post_collision_z(v: V3, v_star: V3, z: V3, m_i: f64, m_j: f64, e: f64) -> PyResult<(V3, V3, f64)> {
    let p = pair(m_i, m_j, e)?;
    kinematics::post_collision_z(&vec3(v), &vec3(v_star), &vec3(z), &p).map(outcome).map_err(value_err)
}

#[pyfunction]
fn pre_collision_omega(v: V3, v_star: V3, omega: V3, m_i: f64, m_j: f64, e: f64) -> PyResult<(V3, V3)> {
    let p = pair(m_i, m_j, e)?;
    kinematics::pre_collision_omega(&vec3(v), &vec3(v_star), &vec3(omega), &p)
        .map(|(a, b)| (tuple(a), tuple(b)))
        .map_err(value_err)
}

/// `int (1 - cos theta) b dsigma` for a named angular preset.
#[pyfunction]
#[pyo3(signature = (preset, coefficients, d=3))]
fn tau_constant(preset: &str, coefficients: Vec<f64>, d: usize) -> PyResult<f64> {
    let b = AngularSection::from_preset(preset, &coefficients).map_err(value_err)?;
    tau_of(&b, d).map(|t| t.tau).map_err(value_err)
}

/// Solution of `dE/dt = -c E^{1 + gamma + lambda/2}` from `e0`.
#[pyfunction]
#[pyo3(signature = (e0, c, t, lambda_=1.0, gamma=0.0))]
fn energy_envelope(e0: f64, c: f64, t: f64, lambda_: f64, gamma: f64) -> f64 {
    bounds::energy_envelope(&EnvelopeSpec { e0, c, lambda: lambda_, gamma }, t)
}

#[pyfunction]
fn lambda_of_chi(e: f64, cos_chi: f64) -> f64 {
    bounds::lambda_of_chi(e, cos_chi)
}

/// Sampling campaign for the Povzner bounds; `kind` is "power" or "shifted".
#[pyfunction]
#[pyo3(signature = (kind, p, samples=100_000, seed=0))]
fn povzner_check<'py>(py: Python<'py>, kind: &str, p: f64, samples: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let kind = match kind {
        "power" => PsiKind::Power,
        "shifted" => PsiKind::ShiftedPower,
        other => return Err(value_err(format!("unknown psi kind {other:?}"))),
    };
    let psi = PsiSpec::new(kind, p).map_err(value_err)?;
    let rep = py.detach(|| bounds::povzner_check(samples, &psi, &mut aux_stream(seed, 0)));
    let d = PyDict::new(py);
    d.set_item("passed", rep.passed())?;
    d.set_item("samples", rep.samples)?;
    d.set_item("p_violations", rep.p_violations)?;
    d.set_item("n_violations", rep.n_violations)?;
    d.set_item("margin", rep.margin())?;
    d.set_item("identity_residual", rep.identity_residual)?;
    d.set_item("lambda_range", (rep.lambda_min, rep.lambda_max))?;
    Ok(d)
}

/// Log-log least squares of `values` against `1 + t` over `window`.
#[pyfunction]
fn fit_power_law<'py>(
    py: Python<'py>,
    times: Vec<f64>,
    values: Vec<f64>,
    window: (f64, f64),
) -> PyResult<Bound<'py, PyDict>> {
    let fit = bounds::fit_power_law(&times, &values, window).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("exponent", fit.exponent)?;
    d.set_item("intercept", fit.intercept)?;
    d.set_item("ci", (fit.ci_low, fit.ci_high))?;
    d.set_item("half_slopes", fit.half_slopes)?;
    d.set_item("samples", fit.samples)?;
    d.set_item("is_power_law", fit.is_power_law)?;
    Ok(d)
}

#[pyfunction]
fn entropy_growth_bound(times: Vec<f64>, energies: Vec<f64>, h0: f64, e: f64, masses: Vec<f64>) -> Vec<f64> {
    bounds::entropy_growth_bound(&times, &energies, h0, e, &masses)
}

#[pyfunction]
fn energy_lower_from_entropy(bold_h: f64, masses: Vec<f64>) -> f64 {
    bounds::energy_lower_from_entropy(bold_h, &masses)
}

#[pyfunction]
fn log_integral_floor(a: f64, b: f64, t: f64) -> PyResult<f64> {
    bounds::log_integral_floor(a, b, t).map_err(value_err)
}

#[pyfunction]
fn haff_floor_constants(k1: f64, e: f64, masses: Vec<f64>) -> (f64, f64) {
    bounds::haff_floor_constants(k1, e, &masses)
}

#[pymodule]
pub fn granmix(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(post_collision_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(post_collision_omega, m)?)?;
    m.add_function(wrap_pyfunction!(post_collision_z, m)?)?;
    m.add_function(wrap_pyfunction!(pre_collision_omega, m)?)?;
    m.add_function(wrap_pyfunction!(tau_constant, m)?)?;
    m.add_function(wrap_pyfunction!(energy_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_of_chi, m)?)?;
    m.add_function(wrap_pyfunction!(povzner_check, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_growth_bound, m)?)?;
    m.add_function(wrap_pyfunction!(energy_lower_from_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(log_integral_floor, m)?)?;
    m.add_function(wrap_pyfunction!(haff_floor_constants, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_round_trip() {
        let v = (1.5, -2.0, 0.25);
        assert_eq!(tuple(vec3(v)), v);
    }

    #[test]
    fn errors_map_to_python_types() {
        Python::attach(|py| {
            assert!(cli_err(CliError::Io("x".into())).is_instance_of::<PyOSError>(py));
            assert!(cli_err(CliError::Config("x".into())).is_instance_of::<PyValueError>(py));
            assert!(pair(1.0, 1.0, 1.5).unwrap_err().is_instance_of::<PyValueError>(py));
        });
    }

    #[test]
    fn reports_become_dicts() {
        Python::attach(|py| {
            let r = BoundReport { name: "n".into(), passed: true, margin: 0.5, samples: 3, config_digest: "d".into() };
            let d = report_dict(py, &r).unwrap();
            assert_eq!(d.len(), 5);
            assert!(d.get_item("passed").unwrap().unwrap().extract::<bool>().unwrap());
        });
    }
}
