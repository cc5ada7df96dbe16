//! Error types shared across the smoothing pipeline.

use thiserror::Error;

use crate::lp::LpStatus;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    #[error("non-finite value in input: {0}")]
    NonFinite(String),

    #[error("singular control: {0}")]
    SingularControl(String),

    /// Projected point lies at or beyond the local curvature center
    /// (1 - kappa*e_y <= 0), or the reference reverses within one station.
    #[error("spatial projection singular at station {station}: {detail}")]
    ProjectionSingular { station: usize, detail: String },

    /// The z-reference climbs or dives faster than airspeed allows
    /// (arcsin argument outside [-1, 1]).
    #[error("infeasible z-slope at station {station}: |dz|={dz} exceeds sampling space {d_s}")]
    InfeasibleSlope { station: usize, dz: f64, d_s: f64 },

    /// Curvature speed bound falls below the minimum airspeed.
    #[error("infeasible speed at station {station}: curvature bound {v_max_curv} < v_min {v_min}")]
    InfeasibleSpeed {
        station: usize,
        v_max_curv: f64,
        v_min: f64,
    },

    #[error("non-positive input: {0}")]
    NonPositive(String),

    #[error("sequence too short: {0}")]
    TooShort(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("LP solve failed with status {0:?}")]
    LpFailed(LpStatus),

    #[error("problem too large for enumeration oracle: {0}")]
    TooLarge(String),

    #[error("invalid limits: {0}")]
    InvalidLimits(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
