//! Vertical-plane (aerobatic) planning: rotate the reference into a frame
//! where the dominating plane becomes the planar one, mimic the roll/pitch
//! bounds in that frame, run the standard pipeline, and rotate back.

use crate::dubins::VehicleLimits;
use crate::error::{Error, Result};
use crate::geometry::Waypoint;
use crate::pipeline::{run_xy_pipeline, PipelineConfig, SmoothingResult};

/// Rotated-frame gamma cap: arcsin never exceeds pi/2, and the model
/// singularity sits exactly there, so the frame itself imposes this bound
/// rather than any maneuver limit.
const GAMMA_FRAME_CAP: f64 = std::f64::consts::FRAC_PI_2 - 1e-6;

/// Rotated-frame |gamma| beyond which the decoupling approximation degrades
/// noticeably.
pub const APPROXIMATION_GAMMA_LIMIT: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    Xy,
    Xz,
}

/// 90-degree rotation about the x-axis mapping the x-z plane onto the
/// planar frame: (x, y, z) -> (x, z, -y).
pub fn rotate_to_vertical(p: [f64; 3]) -> [f64; 3] {
    [p[0], p[2], -p[1]]
}

/// Inverse of [`rotate_to_vertical`]: (x_r, y_r, z_r) -> (x_r, -z_r, y_r).
pub fn rotate_from_vertical(p: [f64; 3]) -> [f64; 3] {
    [p[0], -p[2], p[1]]
}

/// Control bounds transplanted into the rotated frame. The rotated roll
/// mimics the original pitch authority and vice versa: a pitch rate gamma'
/// maps to the heading rate (g/v) tan(phi_r), and a heading rate
/// (g/v) tan(phi) maps to a rotated pitch rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedFrameBounds {
    pub phi_min: f64,
    pub phi_max: f64,
    pub dphi_min: f64,
    pub dphi_max: f64,
    pub dgamma_min: f64,
    pub dgamma_max: f64,
}

/// Bounds for the rotated frame from the original vehicle limits:
///   phi_r in [arctan(-|dgamma_min| v_min / g), arctan(dgamma_max v_max / g)]
///   dphi_r in [dphi_min, dphi_max]
///   dgamma_r in [g tan(phi_min) / v_max, g tan(phi_max) / v_min]
pub fn mimic_bounds(limits: &VehicleLimits) -> Result<RotatedFrameBounds> {
    limits.validate()?;
    Ok(RotatedFrameBounds {
        phi_min: (-limits.dgamma_min.abs() * limits.v_min / limits.g).atan(),
        phi_max: (limits.dgamma_max * limits.v_max / limits.g).atan(),
        dphi_min: limits.dphi_min,
        dphi_max: limits.dphi_max,
        dgamma_min: limits.g * limits.phi_min.tan() / limits.v_max,
        dgamma_max: limits.g * limits.phi_max.tan() / limits.v_min,
    })
}

/// Vehicle limits for running the planar pipeline inside the rotated frame.
pub fn rotated_limits(limits: &VehicleLimits) -> Result<VehicleLimits> {
    let b = mimic_bounds(limits)?;
    Ok(VehicleLimits {
        gamma_min: -GAMMA_FRAME_CAP,
        gamma_max: GAMMA_FRAME_CAP,
        dgamma_min: b.dgamma_min,
        dgamma_max: b.dgamma_max,
        phi_min: b.phi_min,
        phi_max: b.phi_max,
        dphi_min: b.dphi_min,
        dphi_max: b.dphi_max,
        ..*limits
    })
}

/// Picks the plane whose extent dominates the reference: x-z when the z
/// extent exceeds `threshold` times the planar bounding-box diagonal.
pub fn dominating_plane(waypoints: &[Waypoint], threshold: f64) -> Result<Plane> {
    if waypoints.len() < 2 {
        return Err(Error::TooShort("need at least 2 waypoints".into()));
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for w in waypoints {
        for (i, c) in [w.x, w.y, w.z].iter().enumerate() {
            lo[i] = lo[i].min(*c);
            hi[i] = hi[i].max(*c);
        }
    }
    let ext: Vec<f64> = (0..3).map(|i| hi[i] - lo[i]).collect();
    let planar_diag = (ext[0] * ext[0] + ext[1] * ext[1]).sqrt();
    if planar_diag <= 0.0 && ext[2] <= 0.0 {
        return Err(Error::DegeneratePath(
            "reference has zero extent in every axis".into(),
        ));
    }
    if planar_diag <= 0.0 || ext[2] / planar_diag > threshold {
        Ok(Plane::Xz)
    } else {
        Ok(Plane::Xy)
    }
}

/// Plans a vertical-plane maneuver: rotates the reference, substitutes the
/// mimicked limits, runs the planar pipeline in the rotated frame, then
/// rotates the trajectory back and recovers heading and flight-path angle
/// from finite differences (so vertical tangents and inverted segments show
/// up as |gamma| past pi/2 crossings in the original frame).
pub fn plan_aerobatic(
    waypoints: &[Waypoint],
    limits: &VehicleLimits,
    cfg: &PipelineConfig,
) -> Result<SmoothingResult> {
    let rotated: Vec<Waypoint> = waypoints
        .iter()
        .map(|w| {
            let p = rotate_to_vertical([w.x, w.y, w.z]);
            Waypoint::new(p[0], p[1], p[2])
        })
        .collect();
    let rot_limits = rotated_limits(limits)?;
    let mut result = run_xy_pipeline(cfg, &rotated, None, &rot_limits)?;

    let max_gamma_r = result
        .trajectory
        .iter()
        .map(|r| r.gamma.abs())
        .fold(0.0f64, f64::max);
    result.approximation_warning = max_gamma_r > APPROXIMATION_GAMMA_LIMIT;

    // Back-rotate positions; recompute the angles in the original frame.
    let n = result.trajectory.len();
    let pts: Vec<[f64; 3]> = result
        .trajectory
        .iter()
        .map(|r| rotate_from_vertical([r.x, r.y, r.z]))
        .collect();
    for k in 0..n {
        let row = &mut result.trajectory[k];
        row.x = pts[k][0];
        row.y = pts[k][1];
        row.z = pts[k][2];
        // Rotated roll rides on top of the quarter-turn between the frames.
        row.phi += std::f64::consts::FRAC_PI_2;
    }
    for k in 0..n {
        let (a, b) = if k + 1 < n { (k, k + 1) } else { (k - 1, k) };
        let dx = pts[b][0] - pts[a][0];
        let dy = pts[b][1] - pts[a][1];
        let dz = pts[b][2] - pts[a][2];
        let planar = (dx * dx + dy * dy).sqrt();
        result.trajectory[k].psi = dy.atan2(dx);
        result.trajectory[k].gamma = dz.atan2(planar);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rotation_example() {
        assert_eq!(rotate_to_vertical([1.0, 2.0, 3.0]), [1.0, 3.0, -2.0]);
        assert_eq!(rotate_from_vertical([1.0, 3.0, -2.0]), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn rotation_round_trip_isometry() {
        let pts = [
            [0.3, -7.1, 4.4],
            [12.0, 0.0, -3.0],
            [-5.5, 9.9, 1.1],
            [100.0, -200.0, 50.0],
        ];
        for p in pts {
            let rt = rotate_from_vertical(rotate_to_vertical(p));
            for i in 0..3 {
                assert_relative_eq!(rt[i], p[i], epsilon = 1e-12);
            }
            let r = rotate_to_vertical(p);
            let n0 = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            let n1 = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            assert_relative_eq!(n1, n0, epsilon = 1e-12);
        }
        // Pairwise distances preserved.
        for a in pts {
            for b in pts {
                let d0: f64 = (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt();
                let ra = rotate_to_vertical(a);
                let rb = rotate_to_vertical(b);
                let d1: f64 = (0..3)
                    .map(|i| (ra[i] - rb[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert_relative_eq!(d1, d0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn x_axis_fixed() {
        let p = [5.0, 0.0, 0.0];
        assert_eq!(rotate_to_vertical(p), p);
    }

    #[test]
    fn mimic_bound_hand_values() {
        let mut l = VehicleLimits::default();
        l.dgamma_min = -0.15;
        l.dgamma_max = 0.15;
        l.v_min = 10.0;
        l.v_max = 40.0;
        l.phi_min = -std::f64::consts::FRAC_PI_4;
        l.phi_max = std::f64::consts::FRAC_PI_4;
        l.g = 9.81;
        let b = mimic_bounds(&l).unwrap();
        // arctan(0.15 * 40 / 9.81) = arctan(6/9.81) = 0.5489204...
        assert_relative_eq!(b.phi_max, (6.0f64 / 9.81).atan(), epsilon = 1e-12);
        assert_relative_eq!(b.phi_max, 0.5489204, epsilon = 1e-6);
        assert_relative_eq!(b.phi_min, -(1.5f64 / 9.81).atan(), epsilon = 1e-12);
        // g tan(pi/4) / v_min = 9.81 / 10 = 0.981.
        assert_relative_eq!(b.dgamma_max, 0.981, epsilon = 1e-12);
        assert_relative_eq!(b.dgamma_min, -9.81 / 40.0, epsilon = 1e-12);
        assert_eq!(b.dphi_max, l.dphi_max);
    }

    #[test]
    fn plane_selection() {
        // Flat lawnmower course: planar wins.
        let flat = vec![
            Waypoint::new(0.0, 0.0, 10.0),
            Waypoint::new(100.0, 0.0, 10.0),
            Waypoint::new(100.0, 50.0, 12.0),
        ];
        assert_eq!(dominating_plane(&flat, 1.0).unwrap(), Plane::Xy);

        // Vertical loop-like extent: z dominates.
        let loopy = vec![
            Waypoint::new(0.0, 0.0, 0.0),
            Waypoint::new(30.0, 1.0, 60.0),
            Waypoint::new(0.0, 0.0, 120.0),
        ];
        assert_eq!(dominating_plane(&loopy, 1.0).unwrap(), Plane::Xz);

        // All points identical: no usable extent.
        let degenerate = vec![Waypoint::new(1.0, 1.0, 1.0), Waypoint::new(1.0, 1.0, 1.0)];
        assert!(matches!(
            dominating_plane(&degenerate, 1.0),
            Err(Error::DegeneratePath(_))
        ));

        // Pure vertical segment (zero planar diagonal).
        let vertical = vec![Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(0.0, 0.0, 50.0)];
        assert_eq!(dominating_plane(&vertical, 1.0).unwrap(), Plane::Xz);
    }

    #[test]
    fn rotated_limits_frame_cap() {
        let l = VehicleLimits::default();
        let r = rotated_limits(&l).unwrap();
        assert!(r.gamma_max > 1.57 && r.gamma_max < std::f64::consts::FRAC_PI_2);
        assert_eq!(r.v_min, l.v_min);
        assert_eq!(r.v_max, l.v_max);
        r.validate().unwrap();
    }

    #[test]
    fn half_loop_crosses_vertical_tangent() {
        // Semicircle in the x-z plane: climb through vertical to inverted
        // exit. The planar pipeline cannot represent it; the rotated one can.
        let r = 60.0;
        let wps: Vec<Waypoint> = (0..=24)
            .map(|i| {
                let th = i as f64 / 24.0 * std::f64::consts::PI;
                Waypoint::new(r * th.sin(), 0.0, r * (1.0 - th.cos()))
            })
            .collect();
        let mut limits = VehicleLimits::default();
        limits.dgamma_min = -0.5;
        limits.dgamma_max = 0.5;
        let cfg = PipelineConfig {
            limits,
            h: 4.0,
            v_ref: crate::pipeline::VRef::Constant(25.0),
            ..PipelineConfig::default()
        };
        let res = plan_aerobatic(&wps, &cfg.limits.clone(), &cfg).unwrap();
        let max_gamma = res
            .trajectory
            .iter()
            .map(|row| row.gamma.abs())
            .fold(0.0f64, f64::max);
        assert!(
            max_gamma > 1.2,
            "expected a near-vertical tangent, max |gamma| = {max_gamma}"
        );
        // In-plane maneuver: the rotated-frame pitch (out-of-plane channel)
        // stays small, so the approximation holds.
        assert!(!res.approximation_warning);
        // Altitude gain close to the loop diameter.
        let z_max = res
            .trajectory
            .iter()
            .map(|row| row.z)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(z_max > 1.5 * r, "z_max = {z_max}");
    }

    #[test]
    fn out_of_plane_motion_raises_warning() {
        // Steep climb with substantial sideways (y) weave: the rotated-frame
        // pitch must track the weave and leaves the small-angle regime.
        let wps = vec![
            Waypoint::new(0.0, 0.0, 0.0),
            Waypoint::new(20.0, 30.0, 70.0),
            Waypoint::new(40.0, 0.0, 140.0),
            Waypoint::new(60.0, -30.0, 210.0),
        ];
        let cfg = PipelineConfig::default();
        let res = plan_aerobatic(&wps, &cfg.limits.clone(), &cfg).unwrap();
        assert!(res.approximation_warning);
    }

    #[test]
    fn level_line_identity_after_round_trip() {
        // A straight, level reference plans identically in either frame.
        let wps = vec![
            Waypoint::new(0.0, 0.0, 0.0),
            Waypoint::new(200.0, 0.0, 0.0),
        ];
        let cfg = PipelineConfig::default();
        let res = plan_aerobatic(&wps, &cfg.limits.clone(), &cfg).unwrap();
        for row in &res.trajectory {
            assert!(row.y.abs() < 1e-9);
            assert!(row.z.abs() < 1e-9);
            assert!(row.gamma.abs() < 1e-9);
            assert!(row.psi.abs() < 1e-9);
        }
        assert!(!res.approximation_warning);
    }
}
