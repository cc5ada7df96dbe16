//! Dubins airplane kinematics, the decoupled planar subsystem, the tractor
//! variant, the spatial (arc-length parametrized) error dynamics, and a
//! fixed-step RK4 simulator for closed-loop validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;

pub const G_DEFAULT: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirplaneState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Heading, wrapped to (-pi, pi].
    pub psi: f64,
}

impl AirplaneState {
    pub fn new(x: f64, y: f64, z: f64, psi: f64) -> Self {
        AirplaneState {
            x,
            y,
            z,
            psi: wrap_angle(psi),
        }
    }
}

/// Control triple. For the tractor model `phi` is read as the steering angle
/// delta and `gamma` as the terrain-imposed pitch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirplaneControl {
    pub gamma: f64,
    pub phi: f64,
    pub v: f64,
}

/// Spatial-frame error state along a reference path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialState {
    /// Heading deviation from the reference tangent, rad.
    pub e_psi: f64,
    /// Lateral deviation, m, positive toward the left normal.
    pub e_y: f64,
}

/// Rate and magnitude bounds for all three controls plus gravity and the
/// tractor wheelbase. Minimum rate bounds are negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleLimits {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub dgamma_min: f64,
    pub dgamma_max: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub dphi_min: f64,
    pub dphi_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub dv_min: f64,
    pub dv_max: f64,
    pub g: f64,
    /// Wheelbase, m. Tractor model only.
    pub wheelbase: f64,
}

impl Default for VehicleLimits {
    fn default() -> Self {
        VehicleLimits {
            gamma_min: -0.35,
            gamma_max: 0.35,
            dgamma_min: -0.15,
            dgamma_max: 0.15,
            phi_min: -0.6,
            phi_max: 0.6,
            dphi_min: -0.5,
            dphi_max: 0.5,
            v_min: 10.0,
            v_max: 40.0,
            dv_min: -2.0,
            dv_max: 2.0,
            g: G_DEFAULT,
            wheelbase: 2.5,
        }
    }
}

impl VehicleLimits {
    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("gamma", self.gamma_min, self.gamma_max),
            ("dgamma", self.dgamma_min, self.dgamma_max),
            ("phi", self.phi_min, self.phi_max),
            ("dphi", self.dphi_min, self.dphi_max),
            ("v", self.v_min, self.v_max),
            ("dv", self.dv_min, self.dv_max),
        ];
        for (name, lo, hi) in pairs {
            if !(lo < hi) {
                return Err(Error::InvalidLimits(format!("{name}: {lo} >= {hi}")));
            }
        }
        if !(self.g > 0.0) {
            return Err(Error::InvalidLimits(format!("g = {}", self.g)));
        }
        if !(self.v_min > 0.0) {
            return Err(Error::InvalidLimits(format!("v_min = {}", self.v_min)));
        }
        Ok(())
    }
}

/// Vehicle model for simulation and LP assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Airplane,
    Tractor,
}

/// Full Dubins airplane derivative: (x', y', z', psi').
pub fn airplane_derivative(
    state: &AirplaneState,
    control: &AirplaneControl,
    g: f64,
) -> Result<[f64; 4]> {
    check_angle(control.gamma, "gamma")?;
    check_angle(control.phi, "phi")?;
    if !(control.v > 0.0) {
        return Err(Error::SingularControl(format!("v = {}", control.v)));
    }
    let (sg, cg) = control.gamma.sin_cos();
    let (sp, cp) = state.psi.sin_cos();
    Ok([
        control.v * cg * cp,
        control.v * cg * sp,
        control.v * sg,
        g / control.v * control.phi.tan(),
    ])
}

/// Decoupled planar subsystem: (x', y', psi') with v_bar = v*cos(gamma_bar).
/// The heading rate keeps g/v, not g/v_bar.
pub fn planar_derivative(
    state: [f64; 3],
    phi: f64,
    v: f64,
    gamma_bar: f64,
    g: f64,
) -> Result<[f64; 3]> {
    check_angle(gamma_bar, "gamma_bar")?;
    check_angle(phi, "phi")?;
    if !(v > 0.0) {
        return Err(Error::SingularControl(format!("v = {v}")));
    }
    let v_bar = v * gamma_bar.cos();
    Ok([
        v_bar * state[2].cos(),
        v_bar * state[2].sin(),
        g / v * phi.tan(),
    ])
}

/// Ground-vehicle variant: heading rate (v/l)*tan(delta); gamma is imposed by
/// the terrain rather than a free control.
pub fn tractor_derivative(
    state: &AirplaneState,
    gamma_terrain: f64,
    delta: f64,
    v: f64,
    wheelbase: f64,
) -> Result<[f64; 4]> {
    if !(wheelbase > 0.0) {
        return Err(Error::NonPositive(format!("wheelbase = {wheelbase}")));
    }
    check_angle(delta, "delta")?;
    if !(v > 0.0) {
        return Err(Error::SingularControl(format!("v = {v}")));
    }
    let (sg, cg) = gamma_terrain.sin_cos();
    let (sp, cp) = state.psi.sin_cos();
    Ok([v * cg * cp, v * cg * sp, v * sg, v / wheelbase * delta.tan()])
}

/// Arc-length-parametrized error dynamics in kappa form:
///   e_psi' = (1 - kappa*e_y) * g*tan(phi) / (v*v_bar*cos(e_psi)) - kappa
///   e_y'   = (1 - kappa*e_y) * tan(e_psi)
pub fn spatial_derivative(
    sp: &SpatialState,
    phi: f64,
    v: f64,
    v_bar: f64,
    kappa: f64,
    g: f64,
) -> Result<[f64; 2]> {
    let margin = 1.0 - kappa * sp.e_y;
    if margin <= 0.0 {
        return Err(Error::ProjectionSingular {
            station: 0,
            detail: format!("1 - kappa*e_y = {margin}"),
        });
    }
    if sp.e_psi.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::ProjectionSingular {
            station: 0,
            detail: format!("|e_psi| = {} >= pi/2", sp.e_psi.abs()),
        });
    }
    Ok([
        margin * g * phi.tan() / (v * v_bar * sp.e_psi.cos()) - kappa,
        margin * sp.e_psi.tan(),
    ])
}

fn check_angle(a: f64, name: &str) -> Result<()> {
    if !a.is_finite() || a.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::SingularControl(format!("|{name}| = {} >= pi/2", a.abs())));
    }
    Ok(())
}

/// Per-step controls applied under zero-order hold, one entry per RK4 step.
#[derive(Debug, Clone, Default)]
pub struct ControlSchedule {
    pub steps: Vec<AirplaneControl>,
}

/// Fixed-step RK4 under zero-order-hold controls. Returns the state sequence,
/// one entry per schedule step plus the initial state.
pub fn simulate(
    initial: &AirplaneState,
    schedule: &ControlSchedule,
    t_s: f64,
    model: ModelKind,
    limits: &VehicleLimits,
) -> Result<Vec<AirplaneState>> {
    if schedule.steps.is_empty() {
        return Err(Error::TooShort("empty control schedule".into()));
    }
    if !(t_s > 0.0) {
        return Err(Error::NonPositive(format!("T_s = {t_s}")));
    }
    let deriv = |st: &AirplaneState, c: &AirplaneControl| -> Result<[f64; 4]> {
        match model {
            ModelKind::Airplane => airplane_derivative(st, c, limits.g),
            ModelKind::Tractor => {
                tractor_derivative(st, c.gamma, c.phi, c.v, limits.wheelbase)
            }
        }
    };
    let mut states = Vec::with_capacity(schedule.steps.len() + 1);
    let mut cur = *initial;
    states.push(cur);
    for c in &schedule.steps {
        let k1 = deriv(&cur, c)?;
        let k2 = deriv(&step(&cur, &k1, t_s / 2.0), c)?;
        let k3 = deriv(&step(&cur, &k2, t_s / 2.0), c)?;
        let k4 = deriv(&step(&cur, &k3, t_s), c)?;
        cur = AirplaneState::new(
            cur.x + t_s / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            cur.y + t_s / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            cur.z + t_s / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
            cur.psi + t_s / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
        );
        states.push(cur);
    }
    Ok(states)
}

fn step(s: &AirplaneState, d: &[f64; 4], dt: f64) -> AirplaneState {
    // Intermediate RK4 stages keep psi unwrapped; wrap happens on commit.
    AirplaneState {
        x: s.x + dt * d[0],
        y: s.y + dt * d[1],
        z: s.z + dt * d[2],
        psi: s.psi + dt * d[3],
    }
}
