//! Step 3 of the pipeline: curvature-limited upper speed bound along the
//! smoothed path, the min-law against the reference speed, and rate/limit
//! refinement (forward acceleration pass, backward deceleration pass,
//! midpoint compensation).

use crate::dubins::VehicleLimits;
use crate::error::{Error, Result};
use crate::geometry::ReferencePath;

#[derive(Debug, Clone)]
pub struct SpeedProfile {
    /// Arc length per station, m.
    pub s: Vec<f64>,
    /// Curvature-derived speed bound per station (already capped at the
    /// global limit), m/s.
    pub v_max: Vec<f64>,
    /// Rate-feasible speed per station, m/s. Length N+1.
    pub v: Vec<f64>,
    /// Applied per-interval speed after midpoint compensation, length N.
    pub v_bar: Vec<f64>,
    /// True where the curvature bound or a rate pass lowered the reference.
    pub limited_flags: Vec<bool>,
}

impl SpeedProfile {
    pub fn limited_count(&self) -> usize {
        self.limited_flags.iter().filter(|f| **f).count()
    }
}

/// Upper speed bound sqrt(g * tan(phi_max) / |kappa|) per station. Straight
/// stations (kappa = 0) return the global cap `v_cap`.
pub fn v_max_profile(path: &ReferencePath, phi_max: f64, g: f64, v_cap: f64) -> Vec<f64> {
    path.stations
        .iter()
        .map(|st| {
            if st.kappa == 0.0 {
                v_cap
            } else {
                (g * phi_max.tan() / st.kappa.abs()).sqrt().min(v_cap)
            }
        })
        .collect()
}

/// Pointwise min of reference and curvature bound, then a forward
/// acceleration pass, a backward deceleration pass, and midpoint
/// compensation. Rate conversion per station uses dv = D_s * bound / v.
pub fn apply_speed_law(
    v_ref: &[f64],
    v_max_curv: &[f64],
    limits: &VehicleLimits,
    d_s: &[f64],
) -> Result<SpeedProfile> {
    let n1 = v_ref.len();
    if v_max_curv.len() != n1 || d_s.len() != n1 {
        return Err(Error::DimensionMismatch(format!(
            "lengths v_ref {} / v_max {} / d_s {}",
            n1,
            v_max_curv.len(),
            d_s.len()
        )));
    }
    if n1 < 2 {
        return Err(Error::TooShort("speed law needs >= 2 stations".into()));
    }
    for (k, vm) in v_max_curv.iter().enumerate() {
        if *vm < limits.v_min {
            return Err(Error::InfeasibleSpeed {
                station: k,
                v_max_curv: *vm,
                v_min: limits.v_min,
            });
        }
    }

    // Basic law: v = min(v_ref, v_max_curv), clipped into the global range.
    let mut v: Vec<f64> = v_ref
        .iter()
        .zip(v_max_curv)
        .map(|(r, m)| r.min(*m).min(limits.v_max).max(limits.v_min))
        .collect();
    let mut limited: Vec<bool> = v.iter().zip(v_ref).map(|(v, r)| v < r).collect();

    // Forward pass: acceleration bound.
    for k in 1..n1 {
        let dv = d_s[k] * limits.dv_max / v[k - 1];
        if v[k] > v[k - 1] + dv {
            v[k] = v[k - 1] + dv;
            limited[k] = true;
        }
    }
    // Backward pass: deceleration bound, so braking before tight curves is
    // reachable.
    for k in (0..n1 - 1).rev() {
        let dv = d_s[k] * limits.dv_min.abs() / v[k + 1];
        if v[k] > v[k + 1] + dv {
            v[k] = v[k + 1] + dv;
            limited[k] = true;
        }
    }

    let v_bar: Vec<f64> = v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();

    let s: Vec<f64> = d_s
        .iter()
        .scan(0.0, |acc, d| {
            let cur = *acc;
            *acc += d;
            Some(cur)
        })
        .collect();

    Ok(SpeedProfile {
        s,
        v_max: v_max_curv.to_vec(),
        v,
        v_bar,
        limited_flags: limited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{resample_arclength, Waypoint};
    use approx::assert_relative_eq;

    fn lims() -> VehicleLimits {
        VehicleLimits::default()
    }

    #[test]
    fn v_max_hand_values() {
        // kappa = 0.01, phi_max = pi/4 -> sqrt(981) = 31.3209...
        let r = 100.0;
        let wps: Vec<Waypoint> = (0..2048)
            .map(|i| {
                let th = i as f64 / 2047.0 * std::f64::consts::PI;
                Waypoint::new(r * th.cos(), r * th.sin(), 0.0)
            })
            .collect();
        let path = resample_arclength(&wps, 1.0).unwrap();
        let vm = v_max_profile(&path, std::f64::consts::FRAC_PI_4, 9.81, 1e9);
        // Station placement on the polyline jitters kappa by ~0.5%, so check
        // the midpoint to 1% and the interior mean to 0.1%.
        let mid = vm.len() / 2;
        assert_relative_eq!(vm[mid], 31.320919, max_relative = 1e-2);
        let interior = &vm[1..vm.len() - 2];
        let mean = interior.iter().sum::<f64>() / interior.len() as f64;
        assert_relative_eq!(mean, 31.320919, max_relative = 1e-3);
    }

    #[test]
    fn v_max_inverse_of_steady_turn() {
        // rho = v^2/(g tan phi): 40.775 m at v = 20, phi = pi/4.
        let rho: f64 = 40.775;
        let v = (rho * 9.81 * std::f64::consts::FRAC_PI_4.tan()).sqrt();
        assert_relative_eq!(v, 20.0, epsilon = 1e-3);
    }

    #[test]
    fn straight_station_uses_global_cap() {
        let wps = vec![Waypoint::new(0.0, 0.0, 0.0), Waypoint::new(100.0, 0.0, 0.0)];
        let path = resample_arclength(&wps, 5.0).unwrap();
        let vm = v_max_profile(&path, 0.5, 9.81, 40.0);
        assert!(vm.iter().all(|v| *v == 40.0));
    }

    #[test]
    fn min_law_identity_when_unconstrained() {
        let n = 12;
        let v_ref = vec![25.0; n];
        let v_max = vec![100.0; n];
        let d_s = vec![2.0; n];
        let p = apply_speed_law(&v_ref, &v_max, &lims(), &d_s).unwrap();
        assert_eq!(p.v, v_ref);
        assert_eq!(p.limited_count(), 0);
        for vb in &p.v_bar {
            assert_eq!(*vb, 25.0);
        }
    }

    #[test]
    fn curve_dip_ramps_at_rate_bounds() {
        // straight - curve (bound 20) - straight, v_ref 30.
        let n = 61;
        let v_ref = vec![30.0; n];
        let mut v_max = vec![100.0; n];
        for vm in v_max.iter_mut().take(40).skip(20) {
            *vm = 20.0;
        }
        let d_s = vec![2.0; n];
        let l = lims();
        let p = apply_speed_law(&v_ref, &v_max, &l, &d_s).unwrap();
        for k in 20..40 {
            assert!(p.v[k] <= 20.0 + 1e-9);
        }
        // Deceleration ramp before the curve runs exactly at dv_min.
        let mut decel_exact = false;
        for k in 0..n - 1 {
            let dv = p.v[k + 1] - p.v[k];
            let bound_acc = d_s[k + 1] * l.dv_max / p.v[k];
            assert!(dv <= bound_acc + 1e-9);
            let bound_dec = d_s[k] * l.dv_min.abs() / p.v[k + 1];
            assert!(-dv <= bound_dec + 1e-9);
            if dv < 0.0 && (-dv - bound_dec).abs() < 1e-9 {
                decel_exact = true;
            }
        }
        assert!(decel_exact, "expected the backward pass to ramp at the bound");
    }

    #[test]
    fn backward_pass_is_needed() {
        // Without the backward pass the entry into the curve violates the
        // deceleration bound.
        let n = 31;
        let v_ref = vec![30.0; n];
        let mut v_max = vec![100.0; n];
        for vm in v_max.iter_mut().skip(15) {
            *vm = 12.0;
        }
        let d_s = vec![2.0; n];
        let l = lims();
        // Forward-only reconstruction.
        let mut v: Vec<f64> = v_ref
            .iter()
            .zip(&v_max)
            .map(|(r, m): (&f64, &f64)| r.min(*m).min(l.v_max).max(l.v_min))
            .collect();
        for k in 1..n {
            let dv = d_s[k] * l.dv_max / v[k - 1];
            v[k] = v[k].min(v[k - 1] + dv);
        }
        let worst = (0..n - 1)
            .map(|k| (v[k] - v[k + 1]) - d_s[k] * l.dv_min.abs() / v[k + 1])
            .fold(f64::MIN, f64::max);
        assert!(worst > 1e-6, "forward-only profile should violate deceleration");
        // Full law has no violation (checked in curve_dip test); spot-check.
        let p = apply_speed_law(&v_ref, &v_max, &l, &d_s).unwrap();
        for k in 0..n - 1 {
            let viol = (p.v[k] - p.v[k + 1]) - d_s[k] * l.dv_min.abs() / p.v[k + 1];
            assert!(viol <= 1e-9);
        }
    }

    #[test]
    fn infeasible_curve_for_v_min() {
        let v_ref = vec![30.0; 5];
        let v_max = vec![100.0, 100.0, 5.0, 100.0, 100.0];
        let d_s = vec![2.0; 5];
        assert!(matches!(
            apply_speed_law(&v_ref, &v_max, &lims(), &d_s),
            Err(Error::InfeasibleSpeed { station: 2, .. })
        ));
    }

    #[test]
    fn idempotent() {
        let n = 41;
        let v_ref = vec![30.0; n];
        let mut v_max = vec![100.0; n];
        for vm in v_max.iter_mut().take(30).skip(15) {
            *vm = 18.0;
        }
        let d_s = vec![2.0; n];
        let p1 = apply_speed_law(&v_ref, &v_max, &lims(), &d_s).unwrap();
        let p2 = apply_speed_law(&p1.v, &v_max, &lims(), &d_s).unwrap();
        for (a, b) in p1.v.iter().zip(&p2.v) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
