//! Empirical landscape geometry: PL and strong-convexity-w.r.t.-minimizer
//! constants, quasar convexity, curvature probes, line probes and the
//! projection monotonicity check.
//!
//! All constants are infima or suprema over finite samples, so a measured
//! lower constant is an upper bound on the true infimum.

mod diagnose;
mod monotonicity;
mod probe;
mod region;

use thiserror::Error;

use crate::objectives::ObjectiveError;

pub use diagnose::{diagnose, GeometryReport, GAP_GUARD, MIN_SAMPLES};
pub use monotonicity::{
    check_projection_monotonicity, random_tube_curve, MonotonicityReport, MAX_CURVE_STEP,
};
pub use probe::{line_probe, probe_negative_curvature, ProbeRow, DEFAULT_PROBE_STEP};
pub use region::Region;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("{reason} at {point:?}")]
    OutsideValidity { point: Vec<f64>, reason: String },
    #[error("difference step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("direction must be a unit vector of dimension {dim}")]
    InvalidDirection { dim: usize },
    #[error("curve sample spacing {dt} exceeds {max}")]
    CurveSpacing { dt: f64, max: f64 },
    #[error("curve needs at least 3 samples, got {0}")]
    CurveTooShort(usize),
    #[error("region: {0}")]
    Region(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Turn an objective failure at `x` into a validity error for that point.
pub(crate) fn outside(x: &[f64], e: ObjectiveError) -> GeometryError {
    GeometryError::OutsideValidity {
        point: x.to_vec(),
        reason: e.to_string(),
    }
}
