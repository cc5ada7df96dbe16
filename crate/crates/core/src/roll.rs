//! Step 2 of the pipeline: roll-angle selection by linear programming over
//! the linearized, discretized spatial error dynamics, plus the time-domain
//! fallback for references that defeat the spatial parametrization.

use crate::dubins::{ModelKind, VehicleLimits};
use crate::error::{Error, Result};
use crate::geometry::{self, ReferencePath, Waypoint};
use crate::lp::{LinearProgram, LpStatus, solve};

pub const DEFAULT_SLACK_WEIGHT: f64 = 1e6;
const LP_MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpVariant {
    Lp1,
    Lp2,
}

#[derive(Debug, Clone, Copy)]
pub struct RollLpConfig {
    pub variant: LpVariant,
    /// Objective weight on the LP2 softening slack.
    pub slack_weight: f64,
    /// Total LP solves; values above 1 re-reference the geometry on the
    /// previous solution.
    pub lp_iterations: usize,
    pub initial_e_y: f64,
    pub initial_e_psi: f64,
    /// Pins phi_0 by equality bounds when set.
    pub initial_phi: Option<f64>,
}

impl Default for RollLpConfig {
    fn default() -> Self {
        RollLpConfig {
            variant: LpVariant::Lp1,
            slack_weight: DEFAULT_SLACK_WEIGHT,
            lp_iterations: 1,
            initial_e_y: 0.0,
            initial_e_psi: 0.0,
            initial_phi: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RollSolution {
    /// Per-interval roll angle, length N.
    pub phi: Vec<f64>,
    /// Lateral deviation predicted by the linear model, length N+1
    /// (index 0 is the initial condition).
    pub e_y: Vec<f64>,
    /// LP2 softening slack value (0 for LP1).
    pub slack: f64,
    /// Reconstructed planar points ref + e_y * normal, length N+1.
    pub smoothed_path: Vec<[f64; 2]>,
    pub lp_status: LpStatus,
    pub objective: f64,
    /// Geometry used by the final LP solve (differs from the input after
    /// refinement iterations).
    pub final_reference: ReferencePath,
}

/// Jacobians of the kappa-form spatial dynamics at (e_psi, e_y, phi) = 0.
/// State order (e_psi, e_y).
pub fn linearize_spatial(
    kappa: f64,
    v: f64,
    v_bar: f64,
    g: f64,
) -> Result<([[f64; 2]; 2], [f64; 2], [f64; 2])> {
    if !(v > 0.0) || !(v_bar > 0.0) {
        return Err(Error::NonPositive(format!("v = {v}, v_bar = {v_bar}")));
    }
    let a = [[0.0, 0.0], [1.0, 0.0]];
    let b = [g / (v * v_bar), 0.0];
    let w = [-kappa, 0.0];
    Ok((a, b, w))
}

/// Exact discretization of the linear-affine system over step `d_s`. The
/// state matrix is nilpotent (A^2 = 0) so the matrix exponential truncates.
pub fn discretize(
    a: [[f64; 2]; 2],
    b: [f64; 2],
    w: [f64; 2],
    d_s: f64,
) -> ([[f64; 2]; 2], [f64; 2], [f64; 2]) {
    // Ad = I + A*Ds,  integral term M = I*Ds + A*Ds^2/2.
    let ad = [
        [1.0 + a[0][0] * d_s, a[0][1] * d_s],
        [a[1][0] * d_s, 1.0 + a[1][1] * d_s],
    ];
    let half = d_s * d_s / 2.0;
    let m = [
        [d_s + a[0][0] * half, a[0][1] * half],
        [a[1][0] * half, d_s + a[1][1] * half],
    ];
    let bd = [
        m[0][0] * b[0] + m[0][1] * b[1],
        m[1][0] * b[0] + m[1][1] * b[1],
    ];
    let wd = [
        m[0][0] * w[0] + m[0][1] * w[1],
        m[1][0] * w[0] + m[1][1] * w[1],
    ];
    (ad, bd, wd)
}

/// Affine forward substitution of e_y through the discretized dynamics:
/// e_y[k] = drift[k] + sum_j coef[k][j] * phi[j].
struct EyAffine {
    /// Row k has k coefficients (phi_0 .. phi_{k-1}); k = 0..=N.
    coef: Vec<Vec<f64>>,
    drift: Vec<f64>,
}

fn forward_substitute(
    path: &ReferencePath,
    v_ref: &[f64],
    gamma_bar: &[f64],
    limits: &VehicleLimits,
    model: ModelKind,
    initial_e_psi: f64,
    initial_e_y: f64,
) -> Result<EyAffine> {
    let n = path.len() - 1;
    let d_s = path.spacing;
    // Affine representation per state: value = drift + coef . phi
    let mut psi_coef = vec![0.0; n];
    let mut psi_drift = initial_e_psi;
    let mut y_coef = vec![0.0; n];
    let mut y_drift = initial_e_y;

    let mut coef = Vec::with_capacity(n + 1);
    let mut drift = Vec::with_capacity(n + 1);
    coef.push(vec![]);
    drift.push(y_drift);

    for k in 0..n {
        let kappa = path.stations[k].kappa;
        let v = v_ref[k];
        let v_bar = v * gamma_bar[k].cos();
        let (a, b, w) = match model {
            ModelKind::Airplane => linearize_spatial(kappa, v, v_bar, limits.g)?,
            ModelKind::Tractor => {
                // Heading rate (v/l) tan(delta): the airspeed cancels out of
                // the input gain, leaving 1/(l cos(gamma)).
                if !(limits.wheelbase > 0.0) {
                    return Err(Error::NonPositive(format!(
                        "wheelbase = {}",
                        limits.wheelbase
                    )));
                }
                let a = [[0.0, 0.0], [1.0, 0.0]];
                let b = [1.0 / (limits.wheelbase * gamma_bar[k].cos()), 0.0];
                let w = [-kappa, 0.0];
                (a, b, w)
            }
        };
        let (ad, bd, wd) = discretize(a, b, w, d_s);

        let mut new_psi_coef = vec![0.0; n];
        let mut new_y_coef = vec![0.0; n];
        for j in 0..n {
            new_psi_coef[j] = ad[0][0] * psi_coef[j] + ad[0][1] * y_coef[j];
            new_y_coef[j] = ad[1][0] * psi_coef[j] + ad[1][1] * y_coef[j];
        }
        new_psi_coef[k] += bd[0];
        new_y_coef[k] += bd[1];
        let new_psi_drift = ad[0][0] * psi_drift + ad[0][1] * y_drift + wd[0];
        let new_y_drift = ad[1][0] * psi_drift + ad[1][1] * y_drift + wd[1];

        psi_coef = new_psi_coef;
        y_coef = new_y_coef;
        psi_drift = new_psi_drift;
        y_drift = new_y_drift;

        coef.push(y_coef[..=k].to_vec());
        drift.push(y_drift);
    }
    Ok(EyAffine { coef, drift })
}

/// Assembles LP1 or LP2 for a reference path. Decision vector
/// [phi_0..phi_{N-1}, t_1..t_N] for LP1 (2N variables), plus the slack
/// sigma for LP2 (2N+1).
pub fn build_lp(
    path: &ReferencePath,
    v_ref: &[f64],
    gamma_bar: &[f64],
    limits: &VehicleLimits,
    cfg: &RollLpConfig,
) -> Result<LinearProgram> {
    build_lp_model(path, v_ref, gamma_bar, limits, cfg, ModelKind::Airplane)
}

pub fn build_lp_model(
    path: &ReferencePath,
    v_ref: &[f64],
    gamma_bar: &[f64],
    limits: &VehicleLimits,
    cfg: &RollLpConfig,
    model: ModelKind,
) -> Result<LinearProgram> {
    let n = path.len().saturating_sub(1);
    if n < 2 {
        return Err(Error::TooShort(format!("need N >= 2 stations, got N = {n}")));
    }
    if v_ref.len() != n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "v_ref length {} != N+1 = {}",
            v_ref.len(),
            n + 1
        )));
    }
    if gamma_bar.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "gamma_bar length {} != N = {}",
            gamma_bar.len(),
            n
        )));
    }

    let aff = forward_substitute(
        path,
        v_ref,
        gamma_bar,
        limits,
        model,
        cfg.initial_e_psi,
        cfg.initial_e_y,
    )?;

    let lp2 = cfg.variant == LpVariant::Lp2;
    let nv = 2 * n + usize::from(lp2);
    let sigma_col = 2 * n; // valid only when lp2

    let mut cost = vec![0.0; nv];
    for t in cost.iter_mut().take(2 * n).skip(n) {
        *t = 1.0;
    }
    if lp2 {
        cost[sigma_col] = cfg.slack_weight;
    }

    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();

    // Surrogate rows: t_k >= +-(e_y,k - e_y,k^ref), reference zero.
    for k in 1..=n {
        let mut row_pos = vec![0.0; nv];
        let mut row_neg = vec![0.0; nv];
        for (j, c) in aff.coef[k].iter().enumerate() {
            row_pos[j] = *c;
            row_neg[j] = -*c;
        }
        row_pos[n + k - 1] = -1.0;
        row_neg[n + k - 1] = -1.0;
        a.push(row_pos);
        b.push(-aff.drift[k]);
        a.push(row_neg);
        b.push(aff.drift[k]);
    }

    // Rate rows: D_s * dphi_min / v <= phi_{k+1} - phi_k <= D_s * dphi_max / v.
    let d_s = path.spacing;
    for k in 0..n.saturating_sub(1) {
        let up = d_s * limits.dphi_max / v_ref[k];
        let dn = d_s * limits.dphi_min.abs() / v_ref[k];
        let mut row = vec![0.0; nv];
        row[k + 1] = 1.0;
        row[k] = -1.0;
        a.push(row);
        b.push(up);
        let mut row = vec![0.0; nv];
        row[k + 1] = -1.0;
        row[k] = 1.0;
        a.push(row);
        b.push(dn);
    }

    // LP2 shaping rows softened by sigma: e_y,k - e_ref <= sigma.
    if lp2 {
        for k in 1..=n {
            let mut row = vec![0.0; nv];
            for (j, c) in aff.coef[k].iter().enumerate() {
                row[j] = *c;
            }
            row[sigma_col] = -1.0;
            a.push(row);
            b.push(-aff.drift[k]);
        }
    }

    let mut lower = vec![0.0; nv];
    let mut upper = vec![f64::INFINITY; nv];
    for j in 0..n {
        lower[j] = limits.phi_min;
        upper[j] = limits.phi_max;
    }
    if let Some(p0) = cfg.initial_phi {
        lower[0] = p0;
        upper[0] = p0;
    }

    Ok(LinearProgram { cost, a, b, lower, upper })
}

/// Solves the roll LP, reconstructs the smoothed planar path, and optionally
/// refines by re-referencing the geometry on the previous solution.
pub fn solve_roll(
    path: &ReferencePath,
    v_ref: &[f64],
    gamma_bar: &[f64],
    limits: &VehicleLimits,
    cfg: &RollLpConfig,
) -> Result<RollSolution> {
    solve_roll_model(path, v_ref, gamma_bar, limits, cfg, ModelKind::Airplane)
}

pub fn solve_roll_model(
    path: &ReferencePath,
    v_ref: &[f64],
    gamma_bar: &[f64],
    limits: &VehicleLimits,
    cfg: &RollLpConfig,
    model: ModelKind,
) -> Result<RollSolution> {
    if cfg.lp_iterations < 1 {
        return Err(Error::InvalidConfig("lp_iterations must be >= 1".into()));
    }
    check_reversal(path)?;

    let orig_len = path.path_length();
    let mut geom = path.clone();
    let mut result: Option<RollSolution> = None;

    for _iter in 0..cfg.lp_iterations {
        let n = geom.len() - 1;
        // Per-station profiles interpolated by arc length onto the current
        // geometry (station counts drift slightly across refinements).
        let scale = if geom.path_length() > 0.0 {
            orig_len / geom.path_length()
        } else {
            1.0
        };
        let v_now: Vec<f64> = (0..=n)
            .map(|k| interp_profile(v_ref, geom.stations[k].s * scale, orig_len))
            .collect();
        let g_now: Vec<f64> = (0..n)
            .map(|k| interp_profile(gamma_bar, geom.stations[k].s * scale, orig_len))
            .collect();

        let lp = build_lp_model(&geom, &v_now, &g_now, limits, cfg, model)?;
        let sol = solve(&lp, LP_MAX_ITERATIONS)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::LpFailed(sol.status));
        }

        let phi: Vec<f64> = sol.x[..n].to_vec();
        let sigma = if cfg.variant == LpVariant::Lp2 {
            sol.x[2 * n]
        } else {
            0.0
        };

        // Re-run the affine recursion at the solved phi to expose e_y.
        let aff = forward_substitute(
            &geom, &v_now, &g_now, limits, model, cfg.initial_e_psi, cfg.initial_e_y,
        )?;
        let e_y: Vec<f64> = (0..=n)
            .map(|k| {
                aff.drift[k]
                    + aff.coef[k]
                        .iter()
                        .zip(&phi)
                        .map(|(c, p)| c * p)
                        .sum::<f64>()
            })
            .collect();

        // Reject reconstructions at/beyond the curvature center.
        for (k, st) in geom.stations.iter().enumerate() {
            if 1.0 - st.kappa * e_y[k] <= 0.0 {
                return Err(Error::ProjectionSingular {
                    station: k,
                    detail: format!("1 - kappa*e_y = {}", 1.0 - st.kappa * e_y[k]),
                });
            }
        }

        let smoothed: Vec<[f64; 2]> = geom
            .stations
            .iter()
            .zip(&e_y)
            .map(|(st, ey)| [st.x + ey * st.normal[0], st.y + ey * st.normal[1]])
            .collect();

        result = Some(RollSolution {
            phi,
            e_y,
            slack: sigma,
            smoothed_path: smoothed.clone(),
            lp_status: sol.status,
            objective: sol.objective,
            final_reference: geom.clone(),
        });

        // Re-reference geometry on the reconstruction for the next pass.
        if _iter + 1 < cfg.lp_iterations {
            let pts: Vec<[f64; 3]> = smoothed
                .iter()
                .zip(&geom.stations)
                .map(|(p, st)| [p[0], p[1], st.z])
                .collect();
            geom = geometry::path_from_points(&pts, geom.spacing)?;
        }
    }

    Ok(result.expect("lp_iterations >= 1"))
}

fn interp_profile(values: &[f64], s: f64, total: f64) -> f64 {
    if values.len() == 1 {
        return values[0];
    }
    let step = total / (values.len() - 1) as f64;
    let pos = (s / step).clamp(0.0, (values.len() - 1) as f64);
    let k = (pos.floor() as usize).min(values.len() - 2);
    let t = pos - k as f64;
    values[k] * (1.0 - t) + values[k + 1] * t
}

/// A heading jump of (close to) pi within one station means the reference
/// reverses on itself; the spatial parametrization cannot represent it.
fn check_reversal(path: &ReferencePath) -> Result<()> {
    for (k, st) in path.stations.iter().enumerate() {
        if (st.kappa.abs() * path.spacing) >= std::f64::consts::PI - 1e-6 {
            return Err(Error::ProjectionSingular {
                station: k,
                detail: "reference reverses within one station".into(),
            });
        }
    }
    Ok(())
}

/// Time-domain fallback LP and its solution context.
#[derive(Debug, Clone)]
pub struct TimeDomainSolution {
    pub phi: Vec<f64>,
    /// Predicted states (x, y, psi), length N_t + 1.
    pub states: Vec<[f64; 3]>,
    /// Reference points sampled by travel time, length N_t + 1.
    pub reference: Vec<[f64; 3]>,
    pub objective: f64,
    pub t_s: f64,
}

struct TimeDomainModel {
    lp: LinearProgram,
    nominal: Vec<[f64; 3]>,
    reference: Vec<[f64; 3]>,
    /// Affine maps from phi to the (dx, dy, dpsi) deviations per step.
    coef: Vec<[Vec<f64>; 3]>,
    drift: Vec<[f64; 3]>,
    n_t: usize,
}

fn assemble_time_domain(
    waypoints: &[Waypoint],
    t_s: f64,
    v_ref: f64,
    limits: &VehicleLimits,
    nominal_phi: Option<&[f64]>,
) -> Result<TimeDomainModel> {
    if waypoints.len() < 2 {
        return Err(Error::TooShort("need at least 2 waypoints".into()));
    }
    if !(t_s > 0.0) || !(v_ref > 0.0) {
        return Err(Error::NonPositive(format!("T_s = {t_s}, v_ref = {v_ref}")));
    }

    // Reference positions sampled every v*T_s of 3D polyline arc length.
    let mut cum = vec![0.0];
    for w in waypoints.windows(2) {
        let d = ((w[1].x - w[0].x).powi(2)
            + (w[1].y - w[0].y).powi(2)
            + (w[1].z - w[0].z).powi(2))
        .sqrt();
        cum.push(cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    if total <= 0.0 {
        return Err(Error::DegeneratePath("zero-length reference".into()));
    }
    let step = v_ref * t_s;
    let n_t = ((total / step).ceil() as usize).max(2);
    let mut reference = Vec::with_capacity(n_t + 1);
    let mut seg = 0usize;
    for k in 0..=n_t {
        let s = (k as f64 * step).min(total);
        while seg + 2 < waypoints.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 {
            ((s - cum[seg]) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let a = &waypoints[seg];
        let b = &waypoints[seg + 1];
        reference.push([
            a.x + t * (b.x - a.x),
            a.y + t * (b.y - a.y),
            a.z + t * (b.z - a.z),
        ]);
    }

    // Nominal rollout of the planar dynamics under the supplied phi (zero on
    // the first pass): Euler-exact for the straight case, matches the
    // zero-order-hold discretization otherwise.
    let psi0 = (waypoints[1].y - waypoints[0].y).atan2(waypoints[1].x - waypoints[0].x);
    let mut nominal = Vec::with_capacity(n_t + 1);
    nominal.push([waypoints[0].x, waypoints[0].y, psi0]);
    for k in 0..n_t {
        let cur = nominal[k];
        let phi_k = nominal_phi.map_or(0.0, |p| p[k]);
        let psidot = limits.g / v_ref * phi_k.tan();
        let psi_next = cur[2] + t_s * psidot;
        // Integrate position over the step with the exact arc for psidot != 0.
        let (nx, ny) = if psidot.abs() > 1e-12 {
            let r = v_ref / psidot;
            (
                cur[0] + r * (psi_next.sin() - cur[2].sin()),
                cur[1] - r * (psi_next.cos() - cur[2].cos()),
            )
        } else {
            (
                cur[0] + t_s * v_ref * cur[2].cos(),
                cur[1] + t_s * v_ref * cur[2].sin(),
            )
        };
        nominal.push([nx, ny, psi_next]);
    }

    // Deviation dynamics about the nominal, state (dx, dy, dpsi):
    // A_k = [[0,0,-v sin psi],[0,0,v cos psi],[0,0,0]], B = [0,0,g/v].
    // A^2 = 0, so the zero-order-hold discretization truncates exactly.
    let nv = 2 * n_t;
    let mut coef: Vec<[Vec<f64>; 3]> = Vec::with_capacity(n_t + 1);
    let mut drift: Vec<[f64; 3]> = Vec::with_capacity(n_t + 1);
    coef.push([vec![0.0; n_t], vec![0.0; n_t], vec![0.0; n_t]]);
    drift.push([0.0, 0.0, 0.0]);
    for k in 0..n_t {
        let psi = nominal[k][2];
        let sx = -v_ref * psi.sin();
        let sy = v_ref * psi.cos();
        let bpsi = limits.g / v_ref / nominal_phi.map_or(1.0, |p| p[k].cos().powi(2));
        // Ad = I + A*Ts; Bd = (I*Ts + A*Ts^2/2) B.
        let prev_c = &coef[k];
        let prev_d = &drift[k];
        let mut cx = prev_c[0].clone();
        let mut cy = prev_c[1].clone();
        let mut cpsi = prev_c[2].clone();
        for j in 0..n_t {
            cx[j] += t_s * sx * prev_c[2][j];
            cy[j] += t_s * sy * prev_c[2][j];
        }
        let bd_x = sx * t_s * t_s / 2.0 * bpsi;
        let bd_y = sy * t_s * t_s / 2.0 * bpsi;
        let bd_psi = t_s * bpsi;
        cx[k] += bd_x;
        cy[k] += bd_y;
        cpsi[k] += bd_psi;
        // Drift keeps the deviation recursion anchored at the nominal input.
        let nom_u = nominal_phi.map_or(0.0, |p| p[k]);
        let dx = prev_d[0] + t_s * sx * prev_d[2] - bd_x * nom_u;
        let dy = prev_d[1] + t_s * sy * prev_d[2] - bd_y * nom_u;
        let dpsi = prev_d[2] - bd_psi * nom_u;
        coef.push([cx, cy, cpsi]);
        drift.push([dx, dy, dpsi]);
    }

    let mut cost = vec![0.0; nv];
    for c in cost.iter_mut().take(2 * n_t).skip(n_t) {
        *c = 1.0;
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    // t_k >= |x_k - xref| + |y_k - yref| via the four sign half-planes.
    for k in 1..=n_t {
        let rx = nominal[k][0] + drift[k][0] - reference[k][0];
        let ry = nominal[k][1] + drift[k][1] - reference[k][1];
        for (sx, sy) in [(1.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (-1.0, 1.0)] {
            let mut row = vec![0.0; nv];
            for j in 0..n_t {
                row[j] = sx * coef[k][0][j] + sy * coef[k][1][j];
            }
            row[n_t + k - 1] = -1.0;
            a.push(row);
            b.push(-(sx * rx + sy * ry));
        }
    }
    // Roll rate rows in time units.
    for k in 0..n_t - 1 {
        let mut row = vec![0.0; nv];
        row[k + 1] = 1.0;
        row[k] = -1.0;
        a.push(row);
        b.push(t_s * limits.dphi_max);
        let mut row = vec![0.0; nv];
        row[k + 1] = -1.0;
        row[k] = 1.0;
        a.push(row);
        b.push(t_s * limits.dphi_min.abs());
    }
    let mut lower = vec![0.0; nv];
    let mut upper = vec![f64::INFINITY; nv];
    for j in 0..n_t {
        lower[j] = limits.phi_min;
        upper[j] = limits.phi_max;
    }

    Ok(TimeDomainModel {
        lp: LinearProgram { cost, a, b, lower, upper },
        nominal,
        reference,
        coef,
        drift,
        n_t,
    })
}

/// Assembles the time-domain tracking LP for references the spatial pipeline
/// rejects (e.g. reversals). `v_ref` is a constant reference speed.
pub fn build_time_domain_lp(
    waypoints: &[Waypoint],
    t_s: f64,
    v_ref: f64,
    limits: &VehicleLimits,
) -> Result<LinearProgram> {
    Ok(assemble_time_domain(waypoints, t_s, v_ref, limits, None)?.lp)
}

/// Solves the time-domain tracking problem with successive re-linearization
/// about the previous rollout.
pub fn solve_time_domain(
    waypoints: &[Waypoint],
    t_s: f64,
    v_ref: f64,
    limits: &VehicleLimits,
    relinearizations: usize,
) -> Result<TimeDomainSolution> {
    let mut phi: Option<Vec<f64>> = None;
    let mut last: Option<TimeDomainSolution> = None;
    for _ in 0..relinearizations.max(1) {
        let model = assemble_time_domain(waypoints, t_s, v_ref, limits, phi.as_deref())?;
        let sol = solve(&model.lp, LP_MAX_ITERATIONS)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::LpFailed(sol.status));
        }
        let new_phi: Vec<f64> = sol.x[..model.n_t].to_vec();
        let states: Vec<[f64; 3]> = (0..=model.n_t)
            .map(|k| {
                let mut st = [0.0; 3];
                for (axis, stv) in st.iter_mut().enumerate() {
                    let dev: f64 = model.coef[k][axis]
                        .iter()
                        .zip(&new_phi)
                        .map(|(c, p)| c * p)
                        .sum::<f64>()
                        + model.drift[k][axis];
                    *stv = model.nominal[k][axis] + dev;
                }
                st
            })
            .collect();
        last = Some(TimeDomainSolution {
            phi: new_phi.clone(),
            states,
            reference: model.reference,
            objective: sol.objective,
            t_s,
        });
        phi = Some(new_phi);
    }
    Ok(last.expect("at least one solve"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::resample_arclength;
    use approx::assert_relative_eq;

    fn lims() -> VehicleLimits {
        VehicleLimits::default()
    }

    fn straight_path(len: f64, h: f64) -> ReferencePath {
        let wps = vec![Waypoint::new(0.0, 0.0, 50.0), Waypoint::new(len, 0.0, 50.0)];
        resample_arclength(&wps, h).unwrap()
    }

    /// 80 m straight, 90-degree arc of radius 100 (kappa = 0.01), 80 m
    /// straight. Waypoints every ~2 m so resampling sees a smooth curve.
    fn corner_path(h: f64) -> ReferencePath {
        let r = 100.0;
        let mut wps = Vec::new();
        for i in 0..40 {
            wps.push(Waypoint::new(2.0 * i as f64, 0.0, 50.0));
        }
        for i in 0..=79 {
            let th = i as f64 / 79.0 * std::f64::consts::FRAC_PI_2;
            wps.push(Waypoint::new(80.0 + r * th.sin(), r * (1.0 - th.cos()), 50.0));
        }
        for i in 1..=40 {
            wps.push(Waypoint::new(80.0 + r, r + 2.0 * i as f64, 50.0));
        }
        resample_arclength(&wps, h).unwrap()
    }

    /// Limits whose roll bound cannot hold the radius-100 arc at 20 m/s
    /// (needs phi = arctan(v^2 kappa / g) = 0.387), forcing active bounds.
    fn tight_lims() -> VehicleLimits {
        let mut l = VehicleLimits::default();
        l.phi_min = -0.3;
        l.phi_max = 0.3;
        l.dphi_min = -0.1;
        l.dphi_max = 0.1;
        l
    }

    #[test]
    fn linearize_hand_values() {
        let (a, b, w) = linearize_spatial(0.0, 20.0, 20.0, 9.81).unwrap();
        assert_relative_eq!(b[0], 0.024525, epsilon = 1e-12);
        assert_eq!(w, [0.0, 0.0]);
        // A nilpotent: A^2 = 0.
        let a2 = [
            [
                a[0][0] * a[0][0] + a[0][1] * a[1][0],
                a[0][0] * a[0][1] + a[0][1] * a[1][1],
            ],
            [
                a[1][0] * a[0][0] + a[1][1] * a[1][0],
                a[1][0] * a[0][1] + a[1][1] * a[1][1],
            ],
        ];
        assert_eq!(a2, [[0.0, 0.0], [0.0, 0.0]]);

        let (_, _, w) = linearize_spatial(0.02, 20.0, 20.0, 9.81).unwrap();
        assert_eq!(w[0], -0.02);
    }

    #[test]
    fn discretize_hand_values() {
        let (a, b, w) = linearize_spatial(0.0, 20.0, 20.0, 9.81).unwrap();
        let (ad, bd, _) = discretize(a, b, w, 1.0);
        assert_relative_eq!(bd[0], 0.024525, epsilon = 1e-15);
        assert_relative_eq!(bd[1], 0.0122625, epsilon = 1e-15);
        assert_eq!(ad, [[1.0, 0.0], [1.0, 1.0]]);

        // Ds -> 0 limit.
        let (ad, bd, wd) = discretize(a, b, [0.5, 0.0], 1e-12);
        assert_relative_eq!(ad[1][0], 1e-12, epsilon = 1e-20);
        assert!(bd[0].abs() < 1e-10 && bd[1].abs() < 1e-20);
        assert!(wd[0].abs() < 1e-10);

        // A = 0 degenerates to Euler.
        let (ad, bd, _) = discretize([[0.0; 2]; 2], [2.0, 3.0], [0.0; 2], 0.5);
        assert_eq!(ad, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(bd, [1.0, 1.5]);
    }

    #[test]
    fn decision_variable_counts() {
        let wps = vec![
            Waypoint::new(0.0, 0.0, 0.0),
            Waypoint::new(3.0, 0.0, 0.0),
        ];
        let path = resample_arclength(&wps, 1.0).unwrap(); // N = 3
        let v = vec![20.0; 4];
        let g = vec![0.0; 3];
        let cfg = RollLpConfig::default();
        let lp1 = build_lp(&path, &v, &g, &lims(), &cfg).unwrap();
        assert_eq!(lp1.num_vars(), 6);
        let cfg2 = RollLpConfig {
            variant: LpVariant::Lp2,
            ..cfg
        };
        let lp2 = build_lp(&path, &v, &g, &lims(), &cfg2).unwrap();
        assert_eq!(lp2.num_vars(), 7);
    }

    #[test]
    fn straight_reference_zero_roll() {
        let path = straight_path(60.0, 2.0);
        let n = path.len() - 1;
        let v = vec![20.0; n + 1];
        let g = vec![0.0; n];
        let sol = solve_roll(&path, &v, &g, &lims(), &RollLpConfig::default()).unwrap();
        assert_eq!(sol.lp_status, LpStatus::Optimal);
        assert!(sol.objective.abs() < 1e-9);
        for p in &sol.phi {
            assert!(p.abs() < 1e-9);
        }
        for e in &sol.e_y {
            assert!(e.abs() < 1e-9);
        }
    }

    #[test]
    fn corner_activates_bounds() {
        let path = corner_path(4.0);
        let n = path.len() - 1;
        let v = vec![20.0; n + 1];
        let g = vec![0.0; n];
        let l = tight_lims();
        let sol = solve_roll(&path, &v, &g, &l, &RollLpConfig::default()).unwrap();
        assert!(sol.objective > 0.0);
        let max_phi = sol.phi.iter().cloned().fold(0.0f64, |m, p| m.max(p.abs()));
        assert_relative_eq!(max_phi, l.phi_max, epsilon = 1e-7);
        // Bounds and rates hold exactly (solver constraints).
        let ds = path.spacing;
        for p in &sol.phi {
            assert!(*p >= l.phi_min - 1e-9 && *p <= l.phi_max + 1e-9);
        }
        let mut rate_active = false;
        for (k, w) in sol.phi.windows(2).enumerate() {
            let d = w[1] - w[0];
            let up = ds * l.dphi_max / v[k];
            let dn = ds * l.dphi_min / v[k];
            assert!(d <= up + 1e-9 && d >= dn - 1e-9);
            if (d - up).abs() < 1e-9 || (d - dn).abs() < 1e-9 {
                rate_active = true;
            }
        }
        assert!(rate_active, "expected at least one active rate row");
    }

    #[test]
    fn lp2_right_side_on_feasible_corner() {
        let path = corner_path(4.0);
        let n = path.len() - 1;
        let v = vec![20.0; n + 1];
        let g = vec![0.0; n];
        let cfg = RollLpConfig {
            variant: LpVariant::Lp2,
            ..RollLpConfig::default()
        };
        let sol = solve_roll(&path, &v, &g, &lims(), &cfg).unwrap();
        assert!(sol.slack < 1e-9, "sigma = {}", sol.slack);
        for e in &sol.e_y {
            assert!(*e <= 1e-6, "e_y = {e}");
        }
    }

    #[test]
    fn lp2_objective_dominates_lp1() {
        let path = corner_path(4.0);
        let n = path.len() - 1;
        let v = vec![20.0; n + 1];
        let g = vec![0.0; n];
        let l = tight_lims();
        let s1 = solve_roll(&path, &v, &g, &l, &RollLpConfig::default()).unwrap();
        let cfg2 = RollLpConfig {
            variant: LpVariant::Lp2,
            ..RollLpConfig::default()
        };
        let s2 = solve_roll(&path, &v, &g, &l, &cfg2).unwrap();
        assert!(s1.objective > 0.0);
        assert!(s2.objective >= s1.objective - 1e-9);
    }

    #[test]
    fn slack_activates_when_overconstrained() {
        // Initial error to the left with roll limits too tight to get back
        // right immediately: the shaping rows need sigma > 0.
        let path = straight_path(40.0, 2.0);
        let n = path.len() - 1;
        let v = vec![20.0; n + 1];
        let g = vec![0.0; n];
        let mut l = lims();
        l.phi_min = -0.02;
        l.phi_max = 0.02;
        l.dphi_min = -0.01;
        l.dphi_max = 0.01;
        let cfg = RollLpConfig {
            variant: LpVariant::Lp2,
            initial_e_y: 3.0,
            initial_e_psi: 0.0,
            ..RollLpConfig::default()
        };
        let sol = solve_roll(&path, &v, &g, &l, &cfg).unwrap();
        assert_eq!(sol.lp_status, LpStatus::Optimal);
        assert!(sol.slack > 1e-6, "sigma = {}", sol.slack);
    }

    #[test]
    fn linear_model_consistency() {
        let path = corner_path(4.0);
        let n = path.len() - 1;
        let v = vec![20.0; n + 1];
        let g = vec![0.0; n];
        let l = lims();
        let sol = solve_roll(&path, &v, &g, &l, &RollLpConfig::default()).unwrap();
        // Step the discretized dynamics directly and compare.
        let mut e = [0.0f64, 0.0f64];
        for k in 0..n {
            let (a, b, w) = linearize_spatial(
                path.stations[k].kappa,
                v[k],
                v[k],
                l.g,
            )
            .unwrap();
            let (ad, bd, wd) = discretize(a, b, w, path.spacing);
            e = [
                ad[0][0] * e[0] + ad[0][1] * e[1] + bd[0] * sol.phi[k] + wd[0],
                ad[1][0] * e[0] + ad[1][1] * e[1] + bd[1] * sol.phi[k] + wd[1],
            ];
            assert!(
                (e[1] - sol.e_y[k + 1]).abs() <= 1e-9,
                "station {k}: {} vs {}",
                e[1],
                sol.e_y[k + 1]
            );
        }
    }

    #[test]
    fn initial_phi_pinned() {
        let path = corner_path(4.0);
        let n = path.len() - 1;
        let v = vec![20.0; n + 1];
        let g = vec![0.0; n];
        let cfg = RollLpConfig {
            initial_phi: Some(0.1),
            ..RollLpConfig::default()
        };
        let sol = solve_roll(&path, &v, &g, &lims(), &cfg).unwrap();
        assert_relative_eq!(sol.phi[0], 0.1, epsilon = 1e-9);
    }

    #[test]
    fn refinement_iteration_runs() {
        let path = corner_path(4.0);
        let n = path.len() - 1;
        let v = vec![20.0; n + 1];
        let g = vec![0.0; n];
        let cfg = RollLpConfig {
            lp_iterations: 2,
            ..RollLpConfig::default()
        };
        let sol = solve_roll(&path, &v, &g, &tight_lims(), &cfg).unwrap();
        assert_eq!(sol.lp_status, LpStatus::Optimal);
        // The refined reference is the previous reconstruction, not the
        // original corner.
        let max_kappa = sol
            .final_reference
            .stations
            .iter()
            .map(|st| st.kappa.abs())
            .fold(0.0f64, f64::max);
        let orig_max = path.stations.iter().map(|st| st.kappa.abs()).fold(0.0f64, f64::max);
        assert!(max_kappa < orig_max);
    }

    #[test]
    fn reversal_rejected() {
        let wps = vec![
            Waypoint::new(0.0, 0.0, 100.0),
            Waypoint::new(100.0, 0.0, 100.0),
            Waypoint::new(0.0, 0.0, 100.0),
        ];
        let path = resample_arclength(&wps, 2.0).unwrap();
        let n = path.len() - 1;
        let v = vec![20.0; n + 1];
        let g = vec![0.0; n];
        assert!(matches!(
            solve_roll(&path, &v, &g, &lims(), &RollLpConfig::default()),
            Err(Error::ProjectionSingular { .. })
        ));
    }

    #[test]
    fn time_domain_reversal_succeeds() {
        let wps = vec![
            Waypoint::new(0.0, 0.0, 100.0),
            Waypoint::new(100.0, 0.0, 100.0),
            Waypoint::new(0.0, 0.0, 100.0),
        ];
        let l = lims();
        let lp = build_time_domain_lp(&wps, 0.5, 20.0, &l).unwrap();
        let n_t = lp.num_vars() / 2;
        assert_eq!(lp.num_vars(), 2 * n_t);
        let sol = solve_time_domain(&wps, 0.5, 20.0, &l, 3).unwrap();
        for p in &sol.phi {
            assert!(*p >= l.phi_min - 1e-9 && *p <= l.phi_max + 1e-9);
        }
        for w in sol.phi.windows(2) {
            let d = w[1] - w[0];
            assert!(d <= 0.5 * l.dphi_max + 1e-9);
            assert!(d >= 0.5 * l.dphi_min - 1e-9);
        }
    }

    #[test]
    fn time_domain_on_reference_nominal_zero_surrogates() {
        // Straight reference: the straight nominal already tracks it.
        let wps = vec![Waypoint::new(0.0, 0.0, 10.0), Waypoint::new(200.0, 0.0, 10.0)];
        let sol = solve_time_domain(&wps, 0.5, 20.0, &lims(), 1).unwrap();
        assert!(sol.objective.abs() < 1e-9);
        for p in &sol.phi {
            assert!(p.abs() < 1e-9);
        }
    }
}
