//! Python bindings. Structured results (constants, reports, metadata) cross
//! the boundary as plain dicts built from their JSON form.

use std::path::PathBuf;

use loggas::config::SimulationConfig;
use loggas::constants::{constants_report, ConstantsReport};
use loggas::dynamics::{initial_ensemble, simulate as run_simulation, SimulationError, Trajectory as CoreTrajectory};
use loggas::functionals::{entropy_density, entropy_discrete, fisher_discrete, hilbert_all, hilbert_density, relative_entropy, Measure};
use loggas::measures::{moment, w2 as w2_core, w2_to_density};
use loggas::verifier::verify_convergence;
use loggas::{io, EquilibriumDensity as CoreDensity, ParticleEnsemble, Potential as CorePotential};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn ensemble(positions: Vec<f64>) -> PyResult<ParticleEnsemble> {
    ParticleEnsemble::from_unsorted(positions).map_err(value_err)
}

#[pyclass(frozen, module = "loggas_py")]
struct Potential(CorePotential);

#[pymethods]
impl Potential {
    /// `x^4/4 + c x^2/2`.
    #[staticmethod]
    fn quartic_confining(c: f64) -> PyResult<Self> {
        CorePotential::quartic_confining(c).map(Self).map_err(value_err)
    }

    /// `g x^4/4 + x^2/2`.
    #[staticmethod]
    fn quartic_nonconfining(g: f64) -> PyResult<Self> {
        CorePotential::quartic_nonconfining(g).map(Self).map_err(value_err)
    }

    /// `x^(2n)/(2n) + sum_{k<n} coeffs[k-1] x^(2k)/(2k)`.
    #[staticmethod]
    fn general_even(n: u32, coeffs: Vec<f64>) -> PyResult<Self> {
        CorePotential::general_even(n, coeffs).map(Self).map_err(value_err)
    }

    fn value(&self, x: f64) -> f64 {
        self.0.value(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        self.0.derivative(x)
    }

    fn second_derivative(&self, x: f64) -> f64 {
        self.0.second_derivative(x)
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0)
    }

    fn __repr__(&self) -> String {
        format!("Potential({})", serde_json::to_string(&self.0).unwrap_or_default())
    }
}

#[pyclass(frozen, module = "loggas_py")]
struct EquilibriumDensity(CoreDensity);

#[pymethods]
impl EquilibriumDensity {
    #[staticmethod]
    fn confining(c: f64) -> PyResult<Self> {
        CoreDensity::confining(c).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn nonconfining(g: f64) -> PyResult<Self> {
        CoreDensity::nonconfining(g).map(Self).map_err(value_err)
    }

    #[getter]
    fn half_width(&self) -> f64 {
        self.0.half_width()
    }

    fn potential(&self) -> Potential {
        Potential(self.0.potential())
    }

    fn density(&self, x: f64) -> f64 {
        self.0.density(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }

    fn normalization(&self) -> f64 {
        self.0.normalization()
    }

    /// Midpoint quantiles `q((i + 1/2)/n)`.
    fn sample(&self, n: usize) -> PyResult<Vec<f64>> {
        Ok(self.0.sample(n).map_err(value_err)?.into_positions())
    }

    fn hilbert(&self, x: f64) -> PyResult<f64> {
        hilbert_density(&self.0, x).map_err(value_err)
    }

    fn entropy(&self) -> PyResult<f64> {
        entropy_density(&self.0, &self.0.potential()).map_err(value_err)
    }

    /// W2 between the given points and this density.
    fn w2(&self, positions: Vec<f64>) -> PyResult<f64> {
        w2_to_density(&ensemble(positions)?, &self.0).map_err(value_err)
    }

    /// Relative free entropy of the points, against the same-size quantile sample.
    fn relative_entropy(&self, positions: Vec<f64>) -> PyResult<f64> {
        let e = ensemble(positions)?;
        relative_entropy(Measure::Ensemble(&e), &self.0, &self.0.potential()).map_err(value_err)
    }
}

#[pyfunction]
fn hilbert(positions: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(hilbert_all(&ensemble(positions)?))
}

#[pyfunction]
fn entropy(positions: Vec<f64>, potential: &Potential) -> PyResult<f64> {
    entropy_discrete(&ensemble(positions)?, &potential.0).map_err(value_err)
}

#[pyfunction]
fn fisher(positions: Vec<f64>, potential: &Potential) -> PyResult<f64> {
    Ok(fisher_discrete(&ensemble(positions)?, &potential.0))
}

#[pyfunction]
fn second_moment(positions: Vec<f64>) -> PyResult<f64> {
    moment(&ensemble(positions)?, 2.0).map_err(value_err)
}

#[pyfunction]
fn w2(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    Ok(w2_core(&ensemble(a)?, &ensemble(b)?))
}

#[pyclass(frozen, module = "loggas_py")]
struct Trajectory(CoreTrajectory);

#[pymethods]
impl Trajectory {
    #[staticmethod]
    fn read(dir: PathBuf) -> PyResult<Self> {
        io::read_trajectory(&dir).map(Self).map_err(value_err)
    }

    fn write(&self, dir: PathBuf) -> PyResult<()> {
        io::write_trajectory(&dir, &self.0).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Recorded series as a dict of equal-length columns.
    fn series(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        #[derive(Serialize)]
        struct Columns {
            t: Vec<f64>,
            m2: Vec<f64>,
            entropy: Vec<f64>,
            fisher: Vec<f64>,
            w2: Vec<f64>,
            support_radius: Vec<f64>,
        }
        let s = &self.0.series;
        let col = |f: fn(&loggas::dynamics::SeriesRow) -> f64| s.iter().map(f).collect();
        to_py(
            py,
            &Columns {
                t: col(|r| r.t),
                m2: col(|r| r.m2),
                entropy: col(|r| r.entropy),
                fisher: col(|r| r.fisher),
                w2: col(|r| r.w2),
                support_radius: col(|r| r.support_radius),
            },
        )
    }

    /// `(t, positions)` pairs.
    fn snapshots(&self) -> Vec<(f64, Vec<f64>)> {
        self.0
            .snapshots
            .iter()
            .map(|s| (s.t, s.ensemble.positions().to_vec()))
            .collect()
    }

    fn meta(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.meta)
    }

    #[getter]
    fn aborted(&self) -> bool {
        self.0.meta.abort.is_some()
    }

    fn __len__(&self) -> usize {
        self.0.series.len()
    }
}

fn config(json: &str) -> PyResult<SimulationConfig> {
    SimulationConfig::from_json_str(json).map_err(value_err)
}

fn build_constants(cfg: &SimulationConfig) -> PyResult<ConstantsReport> {
    let init = initial_ensemble(&cfg.init, cfg.n, cfg.seed).map_err(value_err)?;
    let opts = cfg.constants.report_options(&init).map_err(value_err)?;
    constants_report(&cfg.potential, opts).map_err(value_err)
}

/// Constants report for a run configuration given as a JSON string.
#[pyfunction]
fn constants(py: Python<'_>, config_json: &str) -> PyResult<Py<PyAny>> {
    to_py(py, &build_constants(&config(config_json)?)?)
}

/// Runs a simulation. Aborted runs return their partial trajectory with
/// `aborted` set; configuration errors raise `ValueError`.
#[pyfunction]
fn simulate(py: Python<'_>, config_json: &str) -> PyResult<Trajectory> {
    let cfg = config(config_json)?;
    match py.detach(|| run_simulation(&cfg, None)) {
        Ok(t) => Ok(Trajectory(t)),
        Err(SimulationError::Setup(e)) => Err(value_err(e)),
        Err(e) => match e.partial() {
            Some(p) => Ok(Trajectory(p.clone())),
            None => Err(PyRuntimeError::new_err(e.to_string())),
        },
    }
}

/// Verification report for a trajectory, using the constants and options of
/// the configuration it was run with.
#[pyfunction]
fn verify(py: Python<'_>, trajectory: &Trajectory) -> PyResult<Py<PyAny>> {
    let traj = &trajectory.0;
    let cfg = &traj.meta.config;
    let report = verify_convergence(traj, &build_constants(cfg)?, &cfg.verify).map_err(value_err)?;
    to_py(py, &report)
}

#[pymodule]
fn loggas_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Potential>()?;
    m.add_class::<EquilibriumDensity>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(hilbert, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(fisher, m)?)?;
    m.add_function(wrap_pyfunction!(second_moment, m)?)?;
    m.add_function(wrap_pyfunction!(w2, m)?)?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
