//! Trajectory smoothing for the Dubins airplane model and a kinematic
//! ground-vehicle variant.
//!
//! Rough 3D waypoint references are resampled by arc length and turned into
//! dynamically feasible trajectories through three decoupled steps: an
//! algebraic flight-path-angle law, roll-angle selection by linear
//! programming over the arc-length-parametrized error dynamics, and a
//! curvature-limited speed law. Vertical-plane maneuvers run the same
//! pipeline in a rotated frame, and references that defeat the spatial
//! parametrization (e.g. reversals) fall back to a time-domain tracking LP.

pub mod aerobatic;
pub mod dubins;
pub mod error;
pub mod gamma;
pub mod geometry;
pub mod io;
pub mod lp;
pub mod pipeline;
pub mod roll;
pub mod speed;

pub use dubins::{
    simulate, AirplaneControl, AirplaneState, ControlSchedule, ModelKind, VehicleLimits,
};
pub use error::{Error, Result};
pub use geometry::{resample_arclength, ReferencePath, Waypoint};
pub use pipeline::{run_pipeline, AeroMode, PipelineConfig, SmoothingResult, VRef};
pub use roll::{solve_roll, solve_time_domain, LpVariant, RollLpConfig};
