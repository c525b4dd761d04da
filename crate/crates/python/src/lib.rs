//! Python bindings. Barriers are `Barrier` objects built with the static
//! constructors; everything else is a module-level function returning plain
//! floats, tuples, lists and dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bmcross_core::analytics::{self, CrossingResult, DensityCurve, DensityKind};
use bmcross_core::barriers::{time_invert, BarrierSpec, BarrierValue};
use bmcross_core::cli::{parse_spec_json, spec_to_json};
use bmcross_core::montecarlo::{self, McConfig, McEstimate};
use bmcross_core::special_fns::{self, Branch};
use bmcross_core::verify::{run_suite, SuiteOptions};
use bmcross_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        Error::Precondition(_) | Error::NoConvergence(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for bmcross_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

#[pyclass(frozen, skip_from_py_object, name = "Barrier", module = "bmcross")]
#[derive(Clone)]
struct Barrier(BarrierSpec);

#[pymethods]
impl Barrier {
    #[staticmethod]
    #[pyo3(signature = (a, b, horizon = 1.0))]
    fn linear(a: f64, b: f64, horizon: f64) -> PyResult<Self> {
        BarrierSpec::linear(a, b, horizon).py().map(Barrier)
    }

    #[staticmethod]
    #[pyo3(signature = (a, b, horizon = 1.0))]
    fn sqrt_remaining(a: f64, b: f64, horizon: f64) -> PyResult<Self> {
        BarrierSpec::sqrt_remaining(a, b, horizon).py().map(Barrier)
    }

    #[staticmethod]
    #[pyo3(signature = (a, b, horizon = 1.0))]
    fn log_remaining(a: f64, b: f64, horizon: f64) -> PyResult<Self> {
        BarrierSpec::log_remaining(a, b, horizon).py().map(Barrier)
    }

    #[staticmethod]
    #[pyo3(signature = (a, b, n, horizon = 1.0))]
    fn hermite(a: f64, b: f64, n: u32, horizon: f64) -> PyResult<Self> {
        BarrierSpec::hermite(a, b, n, horizon).py().map(Barrier)
    }

    #[staticmethod]
    #[pyo3(signature = (a, b, horizon = 1.0))]
    fn two_sided_constant(a: f64, b: f64, horizon: f64) -> PyResult<Self> {
        BarrierSpec::two_sided_constant(a, b, horizon).py().map(Barrier)
    }

    #[staticmethod]
    #[pyo3(signature = (a, b, c, horizon = 1.0))]
    fn two_sided_curved(a: f64, b: f64, c: f64, horizon: f64) -> PyResult<Self> {
        BarrierSpec::two_sided_curved(a, b, c, horizon).py().map(Barrier)
    }

    #[staticmethod]
    #[pyo3(signature = (a, b, horizon = 1.0))]
    fn images_lambert(a: f64, b: f64, horizon: f64) -> PyResult<Self> {
        BarrierSpec::images_lambert(a, b, horizon).py().map(Barrier)
    }

    /// Inverts time around the horizon; inverting twice gives the base back.
    fn time_inverted(&self) -> PyResult<Self> {
        time_invert(&self.0).py().map(Barrier)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        parse_spec_json(text).py().map(Barrier)
    }

    fn to_json(&self) -> String {
        spec_to_json(&self.0).to_string()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.0.family().name()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.0.horizon()
    }

    #[getter]
    fn two_sided(&self) -> bool {
        self.0.is_two_sided()
    }

    /// (upper, lower) at time t; lower is None for one-sided barriers.
    fn __call__(&self, t: f64) -> PyResult<(f64, Option<f64>)> {
        Ok(match self.0.eval(t).py()? {
            BarrierValue::One(v) => (v, None),
            BarrierValue::Two { upper, lower } => (upper, Some(lower)),
        })
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Barrier.from_json('{}')", self.to_json())
    }
}

fn crossing_dict<'py>(py: Python<'py>, r: &CrossingResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("probability", r.probability)?;
    d.set_item("conditions_met", r.conditions_met)?;
    let conds: Vec<(String, bool)> = r.condition_report.iter().map(|c| (c.text.clone(), c.satisfied)).collect();
    d.set_item("conditions", conds)?;
    d.set_item("formula", &r.formula)?;
    Ok(d)
}

fn estimate_dict<'py>(py: Python<'py>, e: &McEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("estimate", e.estimate)?;
    d.set_item("std_error", e.std_error)?;
    d.set_item("ci95", e.ci95)?;
    d.set_item("paths", e.paths_used)?;
    Ok(d)
}

/// Closed-form crossing probability from `start`; `probability` is None when
/// the formula's conditions fail, and `conditions` says which.
#[pyfunction]
#[pyo3(signature = (barrier, start = 0.0))]
fn crossing_prob<'py>(py: Python<'py>, barrier: &Barrier, start: f64) -> PyResult<Bound<'py, PyDict>> {
    crossing_dict(py, &analytics::crossing_prob(&barrier.0, start).py()?)
}

#[pyfunction]
fn sigma_cdf(barrier: &Barrier, t: f64) -> PyResult<f64> {
    analytics::sigma_cdf(&barrier.0, t).py()
}

#[pyfunction]
fn sigma_pdf(barrier: &Barrier, t: f64) -> PyResult<f64> {
    analytics::sigma_pdf(&barrier.0, t).py()
}

#[pyfunction]
fn lambda_cdf(barrier: &Barrier, t: f64) -> PyResult<f64> {
    analytics::lambda_cdf(&barrier.0, t).py()
}

#[pyfunction]
fn lambda_pdf(barrier: &Barrier, t: f64) -> PyResult<f64> {
    analytics::lambda_pdf(&barrier.0, t).py()
}

fn kind_from(name: Option<&str>, spec: &BarrierSpec) -> PyResult<DensityKind> {
    Ok(match name {
        None => DensityKind::default_for(spec),
        Some("sigma") => DensityKind::Sigma,
        Some("lambda") => DensityKind::Lambda,
        Some("hitting-inverted") => DensityKind::HittingInverted,
        Some("hitting-images") => DensityKind::HittingImages,
        Some(other) => return Err(PyValueError::new_err(format!("unknown density kind '{other}'"))),
    })
}

/// Tabulated (grid, cdf, pdf) lists for the barrier's natural curve or `kind`.
#[pyfunction]
#[pyo3(signature = (barrier, kind = None, points = 1000, t_max = None))]
fn density(
    barrier: &Barrier,
    kind: Option<&str>,
    points: usize,
    t_max: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let kind = kind_from(kind, &barrier.0)?;
    let c = DensityCurve::tabulate_until(&barrier.0, kind, points, t_max).py()?;
    Ok((c.grid, c.cdf, c.pdf))
}

fn config(paths: u64, steps: usize, seed: u64, bridge: bool) -> PyResult<McConfig> {
    Ok(McConfig::new(paths, steps, seed).py()?.with_bridge(bridge))
}

/// Simulated crossing probability. The result depends only on the
/// arguments, never on the thread count.
#[pyfunction]
#[pyo3(signature = (barrier, paths = 100_000, steps = 4096, seed = 0, bridge = true, start = 0.0))]
fn mc_crossing<'py>(
    py: Python<'py>,
    barrier: &Barrier,
    paths: u64,
    steps: usize,
    seed: u64,
    bridge: bool,
    start: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(paths, steps, seed, bridge)?.with_start(start);
    let spec = barrier.0.clone();
    let e = py.detach(move || montecarlo::mc_crossing(&spec, &cfg)).py()?;
    estimate_dict(py, &e)
}

/// Empirical σ and λ CDFs on `grid`, as lists of estimate dicts.
#[pyfunction]
#[pyo3(signature = (barrier, grid, paths = 100_000, steps = 4096, seed = 0, bridge = true))]
fn mc_last_exit<'py>(
    py: Python<'py>,
    barrier: &Barrier,
    grid: Vec<f64>,
    paths: u64,
    steps: usize,
    seed: u64,
    bridge: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(paths, steps, seed, bridge)?;
    let spec = barrier.0.clone();
    let e = py.detach(move || montecarlo::mc_last_exit(&spec, &cfg, &grid)).py()?;
    let d = PyDict::new(py);
    d.set_item("grid", &e.grid)?;
    let sigma = e.sigma.iter().map(|x| estimate_dict(py, x)).collect::<PyResult<Vec<_>>>()?;
    let lambda = e.lambda.iter().map(|x| estimate_dict(py, x)).collect::<PyResult<Vec<_>>>()?;
    d.set_item("sigma", sigma)?;
    d.set_item("lambda", lambda)?;
    Ok(d)
}

/// Fortet's equation at level v from start u: (closed-form side, simulated side).
#[pyfunction]
#[pyo3(signature = (barrier, v, u = 0.0, paths = 100_000, steps = 4096, seed = 0, bridge = true))]
#[allow(clippy::too_many_arguments)]
fn mc_fortet_check<'py>(
    py: Python<'py>,
    barrier: &Barrier,
    v: f64,
    u: f64,
    paths: u64,
    steps: usize,
    seed: u64,
    bridge: bool,
) -> PyResult<(f64, Bound<'py, PyDict>)> {
    let cfg = config(paths, steps, seed, bridge)?;
    let spec = barrier.0.clone();
    let (lhs, rhs) = py.detach(move || montecarlo::mc_fortet_check(&spec, v, u, &cfg)).py()?;
    Ok((lhs, estimate_dict(py, &rhs)?))
}

/// The analytic verification suite: (all_passed, [(name, passed, detail)]).
#[pyfunction]
#[pyo3(signature = (mirrored_log = false))]
fn verify(py: Python<'_>, mirrored_log: bool) -> PyResult<(bool, Vec<(String, bool, String)>)> {
    let opts = SuiteOptions { monte_carlo: None, mirrored_log };
    let r = py.detach(move || run_suite(&opts)).py()?;
    let rows = r.checks.into_iter().map(|c| (c.name, c.passed, c.detail)).collect();
    Ok((r.all_passed, rows))
}

#[pyfunction]
fn norm_cdf(x: f64) -> f64 {
    special_fns::norm_cdf(x)
}

#[pyfunction]
#[pyo3(signature = (x, branch = "principal"))]
fn lambert_w(x: f64, branch: &str) -> PyResult<f64> {
    let b = match branch {
        "principal" | "0" => Branch::Principal,
        "lower" | "-1" => Branch::Lower,
        other => return Err(PyValueError::new_err(format!("unknown branch '{other}'"))),
    };
    special_fns::lambert_w(b, x).py()
}

#[pyfunction]
fn hermite_largest_zero(n: u32) -> PyResult<f64> {
    if n == 0 {
        return Err(PyValueError::new_err("H_0 has no zeros"));
    }
    Ok(special_fns::hermite_largest_zero(n))
}

#[pymodule]
fn bmcross(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Barrier>()?;
    m.add_function(wrap_pyfunction!(crossing_prob, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    m.add_function(wrap_pyfunction!(mc_crossing, m)?)?;
    m.add_function(wrap_pyfunction!(mc_last_exit, m)?)?;
    m.add_function(wrap_pyfunction!(mc_fortet_check, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(norm_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_w, m)?)?;
    m.add_function(wrap_pyfunction!(hermite_largest_zero, m)?)?;
    m.add("THREADS_ENV", montecarlo::THREADS_ENV)?;
    Ok(())
}
