//! End-to-end orchestration: resample the waypoint reference, run the three
//! control steps (flight-path angle, roll LP, speed law), validate by
//! closed-loop simulation, and package trajectory plus diagnostics.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aerobatic::{self, Plane};
use crate::dubins::{
    simulate, AirplaneControl, AirplaneState, ControlSchedule, ModelKind, VehicleLimits,
};
use crate::error::{Error, Result};
use crate::gamma::{compute_gamma_profile, GammaProfile};
use crate::geometry::{self, path_from_points, project_point, resample_arclength, Waypoint};
use crate::roll::{solve_roll_model, LpVariant, RollLpConfig, RollSolution};
use crate::speed::apply_speed_law;

/// Reference speed: a single value or one entry per waypoint (interpolated
/// over arc length).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VRef {
    Constant(f64),
    PerWaypoint(Vec<f64>),
}

impl Default for VRef {
    fn default() -> Self {
        VRef::Constant(20.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AeroMode {
    /// Pick the dominating plane from the reference extents.
    Auto,
    ForceXy,
    ForceXz,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub model: ModelKind,
    pub variant: LpVariant,
    /// Sampling time, s.
    pub t_s: f64,
    /// Station spacing, m.
    pub h: f64,
    pub limits: VehicleLimits,
    pub v_ref: VRef,
    pub slack_weight: f64,
    pub lp_iterations: usize,
    pub aerobatic: AeroMode,
    /// Threshold for the dominating-plane heuristic (z extent over planar
    /// bounding-box diagonal).
    pub plane_threshold: f64,
    /// Skip the curvature/rate speed limiting (v = v_ref throughout).
    pub skip_speed_limit: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            model: ModelKind::Airplane,
            variant: LpVariant::Lp1,
            t_s: 0.5,
            h: 4.0,
            limits: VehicleLimits::default(),
            v_ref: VRef::default(),
            slack_weight: crate::roll::DEFAULT_SLACK_WEIGHT,
            lp_iterations: 1,
            aerobatic: AeroMode::Auto,
            plane_threshold: 1.0,
            skip_speed_limit: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_s > 0.0) || !(self.h > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "T_s = {}, h = {} must be positive",
                self.t_s, self.h
            )));
        }
        if self.lp_iterations < 1 {
            return Err(Error::InvalidConfig("lp_iterations must be >= 1".into()));
        }
        self.limits.validate()
    }

    pub fn roll_config(&self) -> RollLpConfig {
        RollLpConfig {
            variant: self.variant,
            slack_weight: self.slack_weight,
            lp_iterations: self.lp_iterations,
            ..RollLpConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub psi: f64,
    pub gamma: f64,
    pub phi: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub max_e_y: f64,
    pub max_phi: f64,
    pub min_v_margin: f64,
    pub slack: f64,
    pub gamma_clamp_count: usize,
    pub speed_limited_count: usize,
    pub lp_iterations: usize,
    /// Closed-loop simulation lateral deviation from the smoothed path.
    pub sim_max_e_y: f64,
    /// Wall-clock solve time; excluded from exports to keep outputs
    /// byte-stable.
    #[serde(skip)]
    pub solve_time_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothingResult {
    pub trajectory: Vec<TrajectoryRow>,
    pub metrics: Metrics,
    /// Set when an aerobatic plan exceeds the small-angle validity of the
    /// rotated-frame approximation.
    pub approximation_warning: bool,
}

/// Runs the full smoothing pipeline. For the tractor model,
/// `terrain_gamma` supplies the terrain-imposed pitch per waypoint.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    waypoints: &[Waypoint],
    terrain_gamma: Option<&[f64]>,
) -> Result<SmoothingResult> {
    cfg.validate()?;
    let frame = match cfg.aerobatic {
        AeroMode::ForceXy => Plane::Xy,
        AeroMode::ForceXz => Plane::Xz,
        AeroMode::Auto => {
            if cfg.model == ModelKind::Tractor {
                Plane::Xy
            } else {
                aerobatic::dominating_plane(waypoints, cfg.plane_threshold)?
            }
        }
    };
    match frame {
        Plane::Xy => run_xy_pipeline(cfg, waypoints, terrain_gamma, &cfg.limits),
        Plane::Xz => aerobatic::plan_aerobatic(waypoints, &cfg.limits, cfg),
    }
}

/// Per-station reference speed from the configured profile.
fn station_v_ref(cfg: &PipelineConfig, waypoints: &[Waypoint], s: &[f64], total: f64) -> Vec<f64> {
    match &cfg.v_ref {
        VRef::Constant(v) => vec![*v; s.len()],
        VRef::PerWaypoint(vals) => {
            // Interpolate over the waypoint polyline's planar arc length.
            let mut cum = vec![0.0];
            for w in waypoints.windows(2) {
                let d = ((w[1].x - w[0].x).powi(2) + (w[1].y - w[0].y).powi(2)).sqrt();
                cum.push(cum.last().unwrap() + d);
            }
            let scale = if *cum.last().unwrap() > 0.0 {
                cum.last().unwrap() / total.max(1e-12)
            } else {
                1.0
            };
            s.iter()
                .map(|sk| {
                    let sw = sk * scale;
                    let mut i = 0;
                    while i + 2 < cum.len() && cum[i + 1] < sw {
                        i += 1;
                    }
                    let len = cum[i + 1] - cum[i];
                    let t = if len > 0.0 {
                        ((sw - cum[i]) / len).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    let a = vals.get(i).copied().unwrap_or(20.0);
                    let b = vals.get(i + 1).copied().unwrap_or(a);
                    a * (1.0 - t) + b * t
                })
                .collect()
        }
    }
}

/// Flight-path-angle profile on its own sampling-space grid, mapped back to
/// the station intervals.
fn gamma_on_stations(
    cfg: &PipelineConfig,
    path: &geometry::ReferencePath,
    v_ref_st: &[f64],
) -> Result<(Vec<f64>, GammaProfile)> {
    let total = path.path_length();
    let z_st: Vec<f64> = path.stations.iter().map(|st| st.z).collect();

    // Build the gamma grid: s_{k+1} = s_k + T_s * v(s_k).
    let mut s_grid = vec![0.0];
    loop {
        let s = *s_grid.last().unwrap();
        let v = path.interp_by_s(v_ref_st, s).max(1e-6);
        let next = s + cfg.t_s * v;
        if next >= total {
            s_grid.push(total);
            break;
        }
        s_grid.push(next);
    }
    if s_grid.len() < 2 {
        return Err(Error::TooShort("gamma grid collapsed".into()));
    }
    let z_g: Vec<f64> = s_grid.iter().map(|s| path.interp_by_s(&z_st, *s)).collect();
    let v_g: Vec<f64> = s_grid
        .iter()
        .map(|s| path.interp_by_s(v_ref_st, *s))
        .collect();
    let profile = compute_gamma_profile(&z_g, &v_g, cfg.t_s, &cfg.limits)?;

    // Map interval values back onto the station grid.
    let n = path.len() - 1;
    let mut out = Vec::with_capacity(n);
    let mut gi = 0usize;
    for k in 0..n {
        let s = path.stations[k].s;
        while gi + 2 < s_grid.len() && s_grid[gi + 1] <= s {
            gi += 1;
        }
        out.push(profile.gamma_bar[gi.min(profile.gamma_bar.len() - 1)]);
    }
    Ok((out, profile))
}

fn polyline_headings(points: &[[f64; 2]]) -> (Vec<f64>, Vec<f64>) {
    let n = points.len();
    let mut psi = Vec::with_capacity(n);
    let mut dist = Vec::with_capacity(n);
    for k in 0..n - 1 {
        let dx = points[k + 1][0] - points[k][0];
        let dy = points[k + 1][1] - points[k][1];
        psi.push(dy.atan2(dx));
        dist.push((dx * dx + dy * dy).sqrt());
    }
    psi.push(*psi.last().unwrap());
    dist.push(*dist.last().unwrap());
    (psi, dist)
}

pub(crate) fn run_xy_pipeline(
    cfg: &PipelineConfig,
    waypoints: &[Waypoint],
    terrain_gamma: Option<&[f64]>,
    limits: &VehicleLimits,
) -> Result<SmoothingResult> {
    let started = Instant::now();
    let path = resample_arclength(waypoints, cfg.h)?;
    let n = path.len() - 1;
    if n < 2 {
        return Err(Error::DegeneratePath(
            "reference too short after resampling (need N >= 2)".into(),
        ));
    }
    let total = path.path_length();
    let s_st: Vec<f64> = path.stations.iter().map(|st| st.s).collect();
    let v_ref_st = station_v_ref(cfg, waypoints, &s_st, total);

    // Step 1: flight-path angle.
    let (gamma_bar, gamma_profile) = match (cfg.model, terrain_gamma) {
        (ModelKind::Tractor, Some(tg)) => {
            if tg.len() != waypoints.len() {
                return Err(Error::DimensionMismatch(format!(
                    "terrain gamma length {} != waypoint count {}",
                    tg.len(),
                    waypoints.len()
                )));
            }
            // Terrain-imposed pitch, interpolated over arc length.
            let step = total / (tg.len() - 1).max(1) as f64;
            let g: Vec<f64> = (0..n)
                .map(|k| {
                    let pos = (path.stations[k].s / step).clamp(0.0, (tg.len() - 1) as f64);
                    let i = (pos.floor() as usize).min(tg.len() - 2);
                    let t = pos - i as f64;
                    tg[i] * (1.0 - t) + tg[i + 1] * t
                })
                .collect();
            (g, None)
        }
        (ModelKind::Tractor, None) => (vec![0.0; n], None),
        (ModelKind::Airplane, _) => {
            let (g, p) = gamma_on_stations(cfg, &path, &v_ref_st)?;
            (g, Some(p))
        }
    };
    let gamma_profile: Option<GammaProfile> = gamma_profile;

    // Step 2: roll LP.
    let roll_cfg = cfg.roll_config();
    let roll: RollSolution =
        solve_roll_model(&path, &v_ref_st, &gamma_bar, limits, &roll_cfg, cfg.model)?;
    let n_final = roll.final_reference.len() - 1;

    // Profiles re-sampled onto the final reference grid.
    let final_s: Vec<f64> = roll.final_reference.stations.iter().map(|st| st.s).collect();
    let scale = total / roll.final_reference.path_length().max(1e-12);
    let v_final: Vec<f64> = final_s
        .iter()
        .map(|s| path.interp_by_s(&v_ref_st, s * scale))
        .collect();
    let gb_final: Vec<f64> = (0..n_final)
        .map(|k| {
            let s = (final_s[k] * scale).min(total);
            let idx = ((s / cfg.h).floor() as usize).min(gamma_bar.len() - 1);
            gamma_bar[idx]
        })
        .collect();

    // Smoothed geometry and its curvature.
    let (psi_sm, dist_sm) = polyline_headings(&roll.smoothed_path);
    let mut kappa_sm = Vec::with_capacity(n_final + 1);
    for k in 0..n_final {
        let d = dist_sm[k].max(1e-9);
        kappa_sm.push(geometry::wrap_angle(psi_sm[k + 1] - psi_sm[k]) / d);
    }
    kappa_sm.push(*kappa_sm.last().unwrap());

    // Step 3: speed law along the smoothed path.
    let v_max_curv: Vec<f64> = if cfg.model == ModelKind::Tractor {
        // Curvature constrains steering, not speed, in the kinematic
        // ground model.
        vec![limits.v_max; n_final + 1]
    } else {
        kappa_sm
            .iter()
            .map(|kap| {
                if *kap == 0.0 {
                    limits.v_max
                } else {
                    (limits.g * limits.phi_max.tan() / kap.abs())
                        .sqrt()
                        .min(limits.v_max)
                }
            })
            .collect()
    };
    let (v_stations, v_bar, limited_count) = if cfg.skip_speed_limit {
        let v = v_final.clone();
        let vb: Vec<f64> = v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        (v, vb, 0)
    } else {
        let sp = apply_speed_law(&v_final, &v_max_curv, limits, &dist_sm)?;
        let cnt = sp.limited_count();
        (sp.v, sp.v_bar, cnt)
    };

    // Assemble the planned trajectory on the final station grid.
    let mut rows = Vec::with_capacity(n_final + 1);
    let mut t = 0.0;
    let mut s_cum = 0.0;
    let mut z = roll.final_reference.stations[0].z;
    for k in 0..=n_final {
        let gk = gb_final[k.min(n_final - 1)];
        let pk = roll.phi[k.min(n_final - 1)];
        let vk = v_bar[k.min(n_final - 1)];
        rows.push(TrajectoryRow {
            t,
            s: s_cum,
            x: roll.smoothed_path[k][0],
            y: roll.smoothed_path[k][1],
            z,
            psi: geometry::wrap_angle(psi_sm[k]),
            gamma: gk,
            phi: pk,
            v: vk,
        });
        if k < n_final {
            let d = dist_sm[k];
            t += d / (vk * gk.cos());
            s_cum += d;
            z += d * gk.tan();
        }
    }

    // Closed-loop validation: resample controls at T_s and integrate the
    // full model, then project back onto the smoothed geometry.
    let sim_max_e_y = closed_loop_deviation(cfg, limits, &rows)?;

    let min_v_margin = v_max_curv
        .iter()
        .zip(&v_stations)
        .map(|(vm, v)| vm - v)
        .fold(f64::INFINITY, f64::min);
    let metrics = Metrics {
        max_e_y: roll.e_y.iter().fold(0.0f64, |m, e| m.max(e.abs())),
        max_phi: roll.phi.iter().fold(0.0f64, |m, p| m.max(p.abs())),
        min_v_margin,
        slack: roll.slack,
        gamma_clamp_count: gamma_profile.as_ref().map_or(0, |p| p.clamp_count()),
        speed_limited_count: limited_count,
        lp_iterations: cfg.lp_iterations,
        sim_max_e_y,
        solve_time_ms: started.elapsed().as_secs_f64() * 1e3,
    };

    Ok(SmoothingResult {
        trajectory: rows,
        metrics,
        approximation_warning: false,
    })
}

fn closed_loop_deviation(
    cfg: &PipelineConfig,
    limits: &VehicleLimits,
    rows: &[TrajectoryRow],
) -> Result<f64> {
    let t_end = rows.last().map_or(0.0, |r| r.t);
    let steps = ((t_end / cfg.t_s).ceil() as usize).max(1);
    let mut schedule = ControlSchedule::default();
    let mut idx = 0usize;
    for i in 0..steps {
        let ti = i as f64 * cfg.t_s;
        while idx + 2 < rows.len() && rows[idx + 1].t <= ti {
            idx += 1;
        }
        schedule.steps.push(AirplaneControl {
            gamma: rows[idx].gamma,
            phi: rows[idx].phi,
            v: rows[idx].v,
        });
    }
    let initial = AirplaneState::new(rows[0].x, rows[0].y, rows[0].z, rows[0].psi);
    let states = simulate(&initial, &schedule, cfg.t_s, cfg.model, limits)?;

    let pts: Vec<[f64; 3]> = rows.iter().map(|r| [r.x, r.y, r.z]).collect();
    let sim_path = path_from_points(&pts, cfg.h)?;
    let mut max_e = 0.0f64;
    for st in &states {
        let (_, e_y, _) = project_point(&sim_path, [st.x, st.y, st.z]);
        max_e = max_e.max(e_y.abs());
    }
    Ok(max_e)
}
