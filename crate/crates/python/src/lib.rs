//! Python bindings: the smoothing pipeline, the time-domain fallback,
//! closed-loop simulation, and the vehicle limit set.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use trajsmooth::pipeline::AeroMode;
use trajsmooth::{
    run_pipeline, simulate, solve_time_domain, AirplaneControl, AirplaneState, ControlSchedule,
    LpVariant, ModelKind, PipelineConfig, VRef, VehicleLimits, Waypoint,
};

fn to_py_err(e: trajsmooth::Error) -> PyErr {
    match &e {
        trajsmooth::Error::Io(_) | trajsmooth::Error::InvalidConfig(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Magnitude and rate bounds for the three controls, gravity, and the
/// tractor wheelbase.
#[pyclass(name = "Limits", from_py_object)]
#[derive(Clone)]
struct Limits {
    inner: VehicleLimits,
}

macro_rules! limit_fields {
    ($($f:ident),*) => {
        #[pymethods]
        impl Limits {
            #[new]
            #[pyo3(signature = (**kwargs))]
            fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
                let mut inner = VehicleLimits::default();
                if let Some(kwargs) = kwargs {
                    for (key, value) in kwargs.iter() {
                        let key: String = key.extract()?;
                        let value: f64 = value.extract()?;
                        match key.as_str() {
                            $(stringify!($f) => inner.$f = value,)*
                            other => {
                                return Err(PyValueError::new_err(format!(
                                    "unknown limit field {other:?}"
                                )))
                            }
                        }
                    }
                }
                Ok(Limits { inner })
            }

            $(
                #[getter]
                fn $f(&self) -> f64 {
                    self.inner.$f
                }
            )*

            fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
                let d = PyDict::new(py);
                $(d.set_item(stringify!($f), self.inner.$f)?;)*
                Ok(d)
            }

            fn __repr__(&self) -> String {
                format!("{:?}", self.inner)
            }
        }
    };
}

limit_fields!(
    gamma_min, gamma_max, dgamma_min, dgamma_max, phi_min, phi_max, dphi_min, dphi_max, v_min,
    v_max, dv_min, dv_max, g, wheelbase
);

fn parse_points(points: &[(f64, f64, f64)]) -> Vec<Waypoint> {
    points.iter().map(|p| Waypoint::new(p.0, p.1, p.2)).collect()
}

/// Smooths a rough waypoint reference into a feasible trajectory.
///
/// Returns a dict with per-sample columns `t, s, x, y, z, psi, gamma, phi, v`,
/// a `metrics` sub-dict, and `approximation_warning`.
#[pyfunction]
#[pyo3(signature = (
    points,
    *,
    limits = None,
    variant = "lp1",
    model = "airplane",
    aerobatic = "auto",
    spacing = 4.0,
    ts = 0.5,
    vref = 20.0,
    iterations = 1,
    slack_weight = None,
    skip_speed_limit = false,
    terrain_gamma = None,
))]
#[allow(clippy::too_many_arguments)]
fn smooth<'py>(
    py: Python<'py>,
    points: Vec<(f64, f64, f64)>,
    limits: Option<Limits>,
    variant: &str,
    model: &str,
    aerobatic: &str,
    spacing: f64,
    ts: f64,
    vref: f64,
    iterations: usize,
    slack_weight: Option<f64>,
    skip_speed_limit: bool,
    terrain_gamma: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = PipelineConfig {
        variant: match variant {
            "lp1" => LpVariant::Lp1,
            "lp2" => LpVariant::Lp2,
            other => return Err(PyValueError::new_err(format!("unknown variant {other:?}"))),
        },
        model: match model {
            "airplane" => ModelKind::Airplane,
            "tractor" => ModelKind::Tractor,
            other => return Err(PyValueError::new_err(format!("unknown model {other:?}"))),
        },
        aerobatic: match aerobatic {
            "auto" => AeroMode::Auto,
            "xy" => AeroMode::ForceXy,
            "xz" => AeroMode::ForceXz,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown aerobatic mode {other:?}"
                )))
            }
        },
        h: spacing,
        t_s: ts,
        v_ref: VRef::Constant(vref),
        lp_iterations: iterations,
        skip_speed_limit,
        ..PipelineConfig::default()
    };
    if let Some(l) = limits {
        cfg.limits = l.inner;
    }
    if let Some(w) = slack_weight {
        cfg.slack_weight = w;
    }
    let wps = parse_points(&points);
    let res = run_pipeline(&cfg, &wps, terrain_gamma.as_deref()).map_err(to_py_err)?;

    let out = PyDict::new(py);
    macro_rules! column {
        ($($f:ident),*) => {
            $(out.set_item(
                stringify!($f),
                res.trajectory.iter().map(|r| r.$f).collect::<Vec<f64>>(),
            )?;)*
        };
    }
    column!(t, s, x, y, z, psi, gamma, phi, v);
    let metrics = PyDict::new(py);
    metrics.set_item("max_e_y", res.metrics.max_e_y)?;
    metrics.set_item("max_phi", res.metrics.max_phi)?;
    metrics.set_item("min_v_margin", res.metrics.min_v_margin)?;
    metrics.set_item("slack", res.metrics.slack)?;
    metrics.set_item("gamma_clamp_count", res.metrics.gamma_clamp_count)?;
    metrics.set_item("speed_limited_count", res.metrics.speed_limited_count)?;
    metrics.set_item("lp_iterations", res.metrics.lp_iterations)?;
    metrics.set_item("sim_max_e_y", res.metrics.sim_max_e_y)?;
    out.set_item("metrics", metrics)?;
    out.set_item("approximation_warning", res.approximation_warning)?;
    Ok(out)
}

/// Time-domain fallback for references the spatial smoother rejects
/// (reversals). Returns `phi`, predicted `states`, the time-sampled
/// `reference`, and the objective.
#[pyfunction]
#[pyo3(signature = (points, *, ts = 0.5, vref = 20.0, limits = None, relinearizations = 3))]
fn fallback<'py>(
    py: Python<'py>,
    points: Vec<(f64, f64, f64)>,
    ts: f64,
    vref: f64,
    limits: Option<Limits>,
    relinearizations: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let l = limits.map(|l| l.inner).unwrap_or_default();
    let wps = parse_points(&points);
    let sol = solve_time_domain(&wps, ts, vref, &l, relinearizations).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("phi", sol.phi)?;
    out.set_item("states", sol.states.to_vec())?;
    out.set_item("reference", sol.reference.to_vec())?;
    out.set_item("objective", sol.objective)?;
    out.set_item("ts", sol.t_s)?;
    Ok(out)
}

/// Fixed-step closed-loop rollout under zero-order-hold controls.
/// `controls` is a list of (gamma, phi, v) triples applied for `ts` each.
/// Returns the state sequence as (x, y, z, psi) tuples.
#[pyfunction]
#[pyo3(signature = (initial, controls, *, ts = 0.5, model = "airplane", limits = None))]
fn rollout(
    initial: (f64, f64, f64, f64),
    controls: Vec<(f64, f64, f64)>,
    ts: f64,
    model: &str,
    limits: Option<Limits>,
) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let model = match model {
        "airplane" => ModelKind::Airplane,
        "tractor" => ModelKind::Tractor,
        other => return Err(PyValueError::new_err(format!("unknown model {other:?}"))),
    };
    let l = limits.map(|l| l.inner).unwrap_or_default();
    let schedule = ControlSchedule {
        steps: controls
            .iter()
            .map(|c| AirplaneControl {
                gamma: c.0,
                phi: c.1,
                v: c.2,
            })
            .collect(),
    };
    let start = AirplaneState::new(initial.0, initial.1, initial.2, initial.3);
    let states = simulate(&start, &schedule, ts, model, &l).map_err(to_py_err)?;
    Ok(states.iter().map(|s| (s.x, s.y, s.z, s.psi)).collect())
}

#[pymodule]
fn trajsmooth_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Limits>()?;
    m.add_function(wrap_pyfunction!(smooth, m)?)?;
    m.add_function(wrap_pyfunction!(fallback, m)?)?;
    m.add_function(wrap_pyfunction!(rollout, m)?)?;
    Ok(())
}
