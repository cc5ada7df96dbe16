//! File formats: waypoint CSV/JSON input, trajectory CSV output, metrics
//! JSON, and the per-axis plot series.
//!
//! Numeric output is written with fixed 9-decimal precision so identical
//! inputs produce byte-identical files.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::Waypoint;
use crate::pipeline::SmoothingResult;

/// Waypoints plus the optional terrain pitch column (tractor references).
#[derive(Debug, Clone, Default)]
pub struct WaypointSet {
    pub points: Vec<Waypoint>,
    pub terrain_gamma: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
struct WaypointRecord {
    x: f64,
    y: f64,
    z: f64,
    gamma: Option<f64>,
}

/// Reads waypoints from CSV (header `x,y,z` with an optional `gamma` column)
/// or a JSON array of `[x, y, z]` triples, selected by file extension.
pub fn read_waypoints(path: &Path) -> Result<WaypointSet> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_waypoints_json(path),
        _ => read_waypoints_csv(path),
    }
}

pub fn read_waypoints_csv(path: &Path) -> Result<WaypointSet> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let has_gamma = rdr
        .headers()
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?
        .iter()
        .any(|h| h.trim() == "gamma");
    let mut points = Vec::new();
    let mut gammas = Vec::new();
    for rec in rdr.deserialize::<WaypointRecord>() {
        let rec = rec.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        if ![rec.x, rec.y, rec.z].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "waypoint ({}, {}, {})",
                rec.x, rec.y, rec.z
            )));
        }
        points.push(Waypoint::new(rec.x, rec.y, rec.z));
        if has_gamma {
            gammas.push(rec.gamma.unwrap_or(0.0));
        }
    }
    Ok(WaypointSet {
        points,
        terrain_gamma: has_gamma.then_some(gammas),
    })
}

pub fn read_waypoints_json(path: &Path) -> Result<WaypointSet> {
    let text = fs::read_to_string(path)?;
    let triples: Vec<[f64; 3]> = serde_json::from_str(&text)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let points = triples
        .iter()
        .map(|t| {
            if t.iter().all(|v| v.is_finite()) {
                Ok(Waypoint::new(t[0], t[1], t[2]))
            } else {
                Err(Error::NonFinite(format!("waypoint {t:?}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WaypointSet {
        points,
        terrain_gamma: None,
    })
}

/// Writes `trajectory.csv` and `metrics.json` into `dir`.
pub fn export_result(result: &SmoothingResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_trajectory_csv(result, &dir.join("trajectory.csv"))?;
    let metrics = serde_json::to_string_pretty(&result.metrics)
        .map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join("metrics.json"), metrics + "\n")?;
    Ok(())
}

pub fn write_trajectory_csv(result: &SmoothingResult, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(result.trajectory.len() * 100 + 64);
    out.extend_from_slice(b"t,s,x,y,z,psi,gamma,phi,v\n");
    for r in &result.trajectory {
        writeln!(
            out,
            "{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9}",
            r.t, r.s, r.x, r.y, r.z, r.psi, r.gamma, r.phi, r.v
        )
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes per-axis plot series into `dir`: the planar and vertical views of
/// the path plus roll, speed and pitch over arc length.
pub fn emit_plot_data(result: &SmoothingResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let series: [(&str, &str, fn(&crate::pipeline::TrajectoryRow) -> (f64, f64)); 5] = [
        ("xy.csv", "x,y", |r| (r.x, r.y)),
        ("xz.csv", "x,z", |r| (r.x, r.z)),
        ("s_phi.csv", "s,phi", |r| (r.s, r.phi)),
        ("s_v.csv", "s,v", |r| (r.s, r.v)),
        ("s_gamma.csv", "s,gamma", |r| (r.s, r.gamma)),
    ];
    for (name, header, f) in series {
        let mut out = Vec::new();
        writeln!(out, "{header}").map_err(|e| Error::Io(e.to_string()))?;
        for r in &result.trajectory {
            let (a, b) = f(r);
            writeln!(out, "{a:.9},{b:.9}").map_err(|e| Error::Io(e.to_string()))?;
        }
        fs::write(dir.join(name), out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{run_pipeline, PipelineConfig};

    #[test]
    fn csv_round_trip_with_gamma() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("wps.csv");
        fs::write(&p, "x,y,z,gamma\n0,0,10,0.02\n50,0,11,0.03\n").unwrap();
        let set = read_waypoints(&p).unwrap();
        assert_eq!(set.points.len(), 2);
        assert_eq!(set.points[1].x, 50.0);
        assert_eq!(set.terrain_gamma, Some(vec![0.02, 0.03]));
    }

    #[test]
    fn csv_without_gamma() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("wps.csv");
        fs::write(&p, "x,y,z\n0,0,10\n50,5,11\n").unwrap();
        let set = read_waypoints(&p).unwrap();
        assert_eq!(set.points.len(), 2);
        assert!(set.terrain_gamma.is_none());
    }

    #[test]
    fn json_waypoints() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("wps.json");
        fs::write(&p, "[[0,0,10],[50,0,12],[100,20,14]]").unwrap();
        let set = read_waypoints(&p).unwrap();
        assert_eq!(set.points.len(), 3);
        assert_eq!(set.points[2].y, 20.0);
    }

    #[test]
    fn non_finite_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("wps.json");
        fs::write(&p, "[[0,0,10],[50,0,1e999]]").unwrap();
        assert!(read_waypoints(&p).is_err());
    }

    #[test]
    fn export_is_byte_deterministic() {
        // Dense gentle arc so the course stays trackable at cruise speed.
        let wps: Vec<Waypoint> = (0..=24)
            .map(|i| {
                let x = 10.0 * i as f64;
                Waypoint::new(x, 30.0 * (x / 100.0).sin(), 100.0 + x / 30.0)
            })
            .collect();
        let cfg = PipelineConfig::default();
        let res = run_pipeline(&cfg, &wps, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_result(&res, &dir.path().join("a")).unwrap();
        export_result(&res, &dir.path().join("b")).unwrap();
        emit_plot_data(&res, &dir.path().join("a")).unwrap();
        for name in ["trajectory.csv", "metrics.json"] {
            let a = fs::read(dir.path().join("a").join(name)).unwrap();
            let b = fs::read(dir.path().join("b").join(name)).unwrap();
            assert_eq!(a, b, "{name} differs");
        }
        let txt = fs::read_to_string(dir.path().join("a/trajectory.csv")).unwrap();
        assert!(txt.starts_with("t,s,x,y,z,psi,gamma,phi,v\n"));
        // Fixed 9-decimal formatting.
        let first = txt.lines().nth(1).unwrap();
        for field in first.split(',') {
            let dot = field.find('.').unwrap();
            assert_eq!(field.len() - dot - 1, 9, "field {field}");
        }
        // solve_time stays out of the metrics export.
        let metrics = fs::read_to_string(dir.path().join("a/metrics.json")).unwrap();
        assert!(!metrics.contains("solve_time"));
    }
}
