//! Experiment configs, runs, certifications and figure reproductions.
//!
//! Every artifact is a pure function of its config and seeds and is written
//! atomically (temporary file, then rename).

mod certify;
mod config;
pub mod output;
mod reproduce;
mod run;

use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::lyapunov::LyapunovError;
use crate::noise::NoiseError;
use crate::objectives::ObjectiveError;
use crate::optimizers::OptimizerError;

pub use certify::{
    certify, certify_setup, default_setup, setup_for, CertifyOutcome, CertifySetup,
    GlobalEntryReport,
};
pub use config::{
    Experiment, ExperimentConfig, NoiseConfig, OptConfig, ScheduleConfig, SeedRange, Seeds, Target,
};
pub use reproduce::{
    example1_table, reproduce_fig2, reproduce_fig4, Example1Row, Example1Table, Fig2Report,
    Fig2Run, Fig4Report, Fig4Row, MuFallback, EXAMPLE1_GRID, FIG2_RUNS, FIG2_X0, FIG4_EPS, FIG4_R,
    FIG4_STEPS, FIG4_X0, SHARP_TOLERANCE,
};
pub use run::{
    reproduce, run, CertificationSummary, RunSummary, MAX_TRAJECTORY_FILES, TABLE_SAMPLES,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("cannot parse: {0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
