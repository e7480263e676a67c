//! Gradient descent, Nesterov (constant and decreasing steps), AGNES and
//! the heavy-ball flow.
//!
//! All momentum schemes share one update:
//!
//! ```text
//! x'_n    = x_n + c_n v_n
//! x_{n+1} = x'_n - eta_n g_n
//! v_{n+1} = rho_n (v_n - sqrt(alpha_n) g_n)
//! ```
//!
//! with `c_n = sqrt(alpha)` for Nesterov/AGNES (`alpha = eta` for Nesterov)
//! and `c_n = sqrt(eta_{n-1})` for the decreasing schedule.

mod discrete;
mod flow;
mod params;
mod record;

use thiserror::Error;

use crate::objectives::ObjectiveError;

pub use discrete::{run_discrete, run_ensemble};
pub use flow::run_flow;
pub use params::{
    decreasing_schedule, AgnesConstants, Horizon, OptimizerParams, ScheduleForm, Scheme,
};
pub use record::{DiscreteIterate, FlowSample, Path, TrajectoryRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("step size {value} violates {bound} (limit {limit})")]
    StepBound {
        bound: &'static str,
        value: f64,
        limit: f64,
    },
    #[error("expected {expected}, got scheme {got:?}")]
    WrongScheme { expected: &'static str, got: Scheme },
    #[error("diverged at step {step}: f = {value} exceeds {threshold}")]
    Divergence {
        step: usize,
        value: f64,
        threshold: f64,
    },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}
