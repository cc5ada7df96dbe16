//! Step 1 of the pipeline: algebraic spatial control law for the flight-path
//! angle. The raw angle comes from inverting the discretized z-dynamics,
//! then rate/limit clamping runs as a sequential fold, and a midpoint
//! prediction compensation produces the applied profile.

use crate::dubins::VehicleLimits;
use crate::error::{Error, Result};

/// Per-station result of the flight-path-angle law. `gamma_bar` has one
/// fewer entry than the N+1 clamped values.
#[derive(Debug, Clone)]
pub struct GammaProfile {
    /// Sampling space D_s,k = T_s * v_k per station.
    pub d_s: Vec<f64>,
    pub gamma_raw: Vec<f64>,
    pub gamma_clamped: Vec<f64>,
    /// Applied control per interval, length N.
    pub gamma_bar: Vec<f64>,
    /// True where rate or limit clamping changed the raw value.
    pub clamp_flags: Vec<bool>,
}

impl GammaProfile {
    pub fn clamp_count(&self) -> usize {
        self.clamp_flags.iter().filter(|f| **f).count()
    }
}

/// Sampling space D_s = T_s * v.
pub fn sampling_space(t_s: f64, v: f64) -> Result<f64> {
    if !(t_s > 0.0) {
        return Err(Error::NonPositive(format!("T_s = {t_s}")));
    }
    if !(v > 0.0) {
        return Err(Error::NonPositive(format!("v = {v}")));
    }
    Ok(t_s * v)
}

/// Raw flight-path angle from the z-reference slope: arcsin((z_next - z)/D_s).
pub fn gamma_raw(z_next: f64, z_k: f64, d_s: f64) -> Result<f64> {
    if !(d_s > 0.0) {
        return Err(Error::NonPositive(format!("D_s = {d_s}")));
    }
    let ratio = (z_next - z_k) / d_s;
    if ratio.abs() > 1.0 {
        return Err(Error::InfeasibleSlope {
            station: 0,
            dz: z_next - z_k,
            d_s,
        });
    }
    Ok(ratio.asin())
}

/// Rate and limit clamping relative to the previous clamped value.
pub fn clamp_rate_limit(
    prev: f64,
    raw: f64,
    d_s: f64,
    v: f64,
    limits: &VehicleLimits,
) -> f64 {
    let dg_min = d_s * limits.dgamma_min.abs() / v;
    let dg_max = d_s * limits.dgamma_max / v;
    let lo = limits.gamma_min.max(prev - dg_min);
    let hi = limits.gamma_max.min(prev + dg_max);
    raw.max(lo).min(hi)
}

/// Midpoint prediction compensation: averages consecutive clamped values,
/// producing N outputs from N+1 inputs.
pub fn midpoint_compensation(clamped: &[f64]) -> Result<Vec<f64>> {
    if clamped.len() < 2 {
        return Err(Error::TooShort(format!(
            "midpoint compensation needs >= 2 entries, got {}",
            clamped.len()
        )));
    }
    Ok(clamped
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .collect())
}

/// Chains raw angle, sequential clamping and midpoint compensation over a
/// z-reference of N+1 points. The first station uses the raw value directly.
pub fn compute_gamma_profile(
    z_ref: &[f64],
    v_ref: &[f64],
    t_s: f64,
    limits: &VehicleLimits,
) -> Result<GammaProfile> {
    compute_gamma_profile_varying(z_ref, v_ref, t_s, &|_| *limits)
}

/// Same as [`compute_gamma_profile`] but with operating-point-varying bounds:
/// `limits_at(k)` supplies the limits active at station k.
pub fn compute_gamma_profile_varying(
    z_ref: &[f64],
    v_ref: &[f64],
    t_s: f64,
    limits_at: &dyn Fn(usize) -> VehicleLimits,
) -> Result<GammaProfile> {
    let n1 = z_ref.len();
    if n1 < 2 {
        return Err(Error::TooShort(format!("z_ref length {n1} < 2")));
    }
    if v_ref.len() != n1 {
        return Err(Error::DimensionMismatch(format!(
            "v_ref length {} != z_ref length {}",
            v_ref.len(),
            n1
        )));
    }

    let mut d_s = Vec::with_capacity(n1);
    let mut raw = Vec::with_capacity(n1);
    for k in 0..n1 {
        let ds_k = sampling_space(t_s, v_ref[k])?;
        d_s.push(ds_k);
        if k + 1 < n1 {
            raw.push(gamma_raw(z_ref[k + 1], z_ref[k], ds_k).map_err(|e| match e {
                Error::InfeasibleSlope { dz, d_s, .. } => {
                    Error::InfeasibleSlope { station: k, dz, d_s }
                }
                other => other,
            })?);
        }
    }
    // Last station has no forward difference; copy the previous raw value.
    raw.push(*raw.last().unwrap());

    let mut clamped = Vec::with_capacity(n1);
    let mut flags = Vec::with_capacity(n1);
    clamped.push(raw[0]);
    flags.push(false);
    for k in 1..n1 {
        let lim = limits_at(k);
        let c = clamp_rate_limit(clamped[k - 1], raw[k], d_s[k], v_ref[k], &lim);
        flags.push((c - raw[k]).abs() > 1e-15);
        clamped.push(c);
    }

    let gamma_bar = midpoint_compensation(&clamped)?;
    Ok(GammaProfile {
        d_s,
        gamma_raw: raw,
        gamma_clamped: clamped,
        gamma_bar,
        clamp_flags: flags,
    })
}
