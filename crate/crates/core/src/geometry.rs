//! Reference path representation: arc-length resampling of waypoint polylines,
//! per-station curvature/heading/normal estimation, and point-to-path projection.
//!
//! Arc length is measured in the (x, y)-plane; z rides along the same
//! parameter. Curvature is stored as kappa = 1/rho so straight segments are
//! kappa = 0 rather than an infinite radius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest angular distance wrapped to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * std::f64::consts::PI);
    if r > std::f64::consts::PI {
        r -= 2.0 * std::f64::consts::PI;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Waypoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Waypoint { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// One resampled station along a reference path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Station {
    /// Planar arc length from the path start, m.
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Heading of the planar tangent, rad, wrapped to (-pi, pi].
    pub psi_ref: f64,
    /// Signed curvature, 1/m. Zero on straight segments.
    pub kappa: f64,
    /// Left-hand unit normal of the planar tangent.
    pub normal: [f64; 2],
}

/// Uniformly resampled reference path. Consecutive stations are exactly
/// `spacing` apart in planar arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath {
    pub stations: Vec<Station>,
    pub spacing: f64,
}

impl ReferencePath {
    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    /// Total planar arc length (final station s).
    pub fn path_length(&self) -> f64 {
        self.stations.last().map_or(0.0, |st| st.s)
    }

    /// Linear interpolation of a per-station quantity at arc length `s`
    /// (clamped to the path ends).
    pub fn interp_by_s(&self, values: &[f64], s: f64) -> f64 {
        debug_assert_eq!(values.len(), self.stations.len());
        if values.is_empty() {
            return 0.0;
        }
        if s <= 0.0 {
            return values[0];
        }
        let last = self.path_length();
        if s >= last {
            return *values.last().unwrap();
        }
        let k = (s / self.spacing).floor() as usize;
        let k = k.min(values.len() - 2);
        let t = (s - self.stations[k].s) / self.spacing;
        values[k] * (1.0 - t) + values[k + 1] * t
    }
}

/// Resamples a waypoint polyline at uniform planar arc-length steps `h`.
///
/// Heading comes from planar segment tangents, curvature from causal
/// first differences of heading (the last station copies its predecessor).
pub fn resample_arclength(waypoints: &[Waypoint], h: f64) -> Result<ReferencePath> {
    if waypoints.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("waypoint coordinates".into()));
    }
    if waypoints.len() < 2 {
        return Err(Error::DegeneratePath("need at least 2 waypoints".into()));
    }
    if !(h > 0.0) {
        return Err(Error::NonPositive(format!("spacing h = {h}")));
    }

    // Cumulative planar arc length along the polyline.
    let mut cum = Vec::with_capacity(waypoints.len());
    cum.push(0.0);
    for i in 1..waypoints.len() {
        let dx = waypoints[i].x - waypoints[i - 1].x;
        let dy = waypoints[i].y - waypoints[i - 1].y;
        cum.push(cum[i - 1] + (dx * dx + dy * dy).sqrt());
    }
    let total = *cum.last().unwrap();
    if total < h {
        return Err(Error::DegeneratePath(format!(
            "total planar length {total} below spacing {h}"
        )));
    }

    // Station count: s = 0, h, ..., floor(L/h)*h (tolerant of fp residue).
    let n_stations = ((total / h) + 1e-9).floor() as usize + 1;

    // Positions by linear interpolation along the polyline.
    let mut pts = Vec::with_capacity(n_stations);
    let mut seg = 0usize;
    for k in 0..n_stations {
        let s = k as f64 * h;
        while seg + 2 < waypoints.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let seg_len = cum[seg + 1] - cum[seg];
        let t = if seg_len > 0.0 {
            ((s - cum[seg]) / seg_len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let a = &waypoints[seg];
        let b = &waypoints[seg + 1];
        pts.push([
            a.x + t * (b.x - a.x),
            a.y + t * (b.y - a.y),
            a.z + t * (b.z - a.z),
        ]);
    }

    // Headings as vertex tangents (central differences). Chord headings
    // would lag the true tangent by kappa*h/2, which a tracking vehicle
    // accumulates into a lateral offset of h/2 times the net heading change.
    let mut psi = Vec::with_capacity(n_stations);
    for k in 0..n_stations {
        let lo = k.saturating_sub(1);
        let hi = (k + 1).min(n_stations - 1);
        let dx = pts[hi][0] - pts[lo][0];
        let dy = pts[hi][1] - pts[lo][1];
        psi.push(dy.atan2(dx));
    }

    // Curvature from causal heading differences; last copies previous.
    let mut kappa = Vec::with_capacity(n_stations);
    for k in 0..n_stations - 1 {
        kappa.push(wrap_angle(psi[k + 1] - psi[k]) / h);
    }
    kappa.push(*kappa.last().unwrap());

    let stations = (0..n_stations)
        .map(|k| Station {
            s: k as f64 * h,
            x: pts[k][0],
            y: pts[k][1],
            z: pts[k][2],
            psi_ref: wrap_angle(psi[k]),
            kappa: kappa[k],
            normal: [-psi[k].sin(), psi[k].cos()],
        })
        .collect();

    Ok(ReferencePath {
        stations,
        spacing: h,
    })
}

/// Builds a reference path directly from already-uniform resampled points.
/// Used when the LP refinement loop reconstructs geometry.
pub fn path_from_points(points: &[[f64; 3]], h: f64) -> Result<ReferencePath> {
    let wps: Vec<Waypoint> = points
        .iter()
        .map(|p| Waypoint::new(p[0], p[1], p[2]))
        .collect();
    resample_arclength(&wps, h)
}

/// Projects a 3D point onto the path. Returns (s, e_y, e_z): arc length of the
/// foot point, signed lateral offset (positive toward the left normal), and
/// vertical offset. Endpoints clamp.
pub fn project_point(path: &ReferencePath, p: [f64; 3]) -> (f64, f64, f64) {
    let st = &path.stations;
    let mut best = (0.0, 0.0, 0.0);
    let mut best_d2 = f64::INFINITY;
    for k in 0..st.len() - 1 {
        let ax = st[k].x;
        let ay = st[k].y;
        let bx = st[k + 1].x;
        let by = st[k + 1].y;
        let vx = bx - ax;
        let vy = by - ay;
        let seg2 = vx * vx + vy * vy;
        let t = if seg2 > 0.0 {
            (((p[0] - ax) * vx + (p[1] - ay) * vy) / seg2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let fx = ax + t * vx;
        let fy = ay + t * vy;
        let dx = p[0] - fx;
        let dy = p[1] - fy;
        let d2 = dx * dx + dy * dy;
        if d2 < best_d2 {
            best_d2 = d2;
            // Signed offset via the left normal of the segment tangent.
            let inv = seg2.sqrt().max(1e-300);
            let nx = -vy / inv;
            let ny = vx / inv;
            let e_y = dx * nx + dy * ny;
            let fz = st[k].z + t * (st[k + 1].z - st[k].z);
            best = (st[k].s + t * path.spacing, e_y, p[2] - fz);
        }
    }
    best
}

/// Final arc length of the path.
pub fn path_length(path: &ReferencePath) -> f64 {
    path.path_length()
}
