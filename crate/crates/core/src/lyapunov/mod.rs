//! Lyapunov functionals along trajectories and their contraction certificates.
//!
//! Every certificate has the form `V_{k+1} <= q_k V_k + c_k` checked step by
//! step, plus an endpoint bound on `f - inf f`. Deterministic runs use a
//! relative slack of `1e-12`; ensemble expectations are compared through
//! paired per-run differences and pass within four standard errors.

mod continuous;
mod descent;
mod discrete;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objectives::{ObjectiveError, ObjectiveSpec};
use crate::optimizers::{OptimizerError, Scheme, TrajectoryRecord};

pub use continuous::{certify_continuous, certify_global, continuous_lyapunov, GlobalEntry};
pub use descent::{certify_descent_lemma, recursion_bound};
pub use discrete::{
    discrete_lyapunov_agnes, discrete_lyapunov_decreasing, discrete_lyapunov_nag,
    nag_lyapunov_coefficient, MIN_ENSEMBLE,
};

/// Relative slack of deterministic certificates.
pub const DETERMINISTIC_SLACK: f64 = 1e-12;
/// Standard errors allowed in ensemble certificates.
pub const Z_SLACK: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    Continuous,
    Global,
    Discrete,
    Additive,
    Decreasing,
    Agnes,
}

impl Theorem {
    pub const ALL: [Theorem; 6] = [
        Theorem::Continuous,
        Theorem::Global,
        Theorem::Discrete,
        Theorem::Additive,
        Theorem::Decreasing,
        Theorem::Agnes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::Continuous => "continuous",
            Theorem::Global => "global",
            Theorem::Discrete => "discrete",
            Theorem::Additive => "additive",
            Theorem::Decreasing => "decreasing",
            Theorem::Agnes => "agnes",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = LyapunovError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| LyapunovError::UnknownTheorem(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LyapunovError {
    #[error("unknown theorem `{0}`")]
    UnknownTheorem(String),
    #[error("{0} requires an affine minimizer projection")]
    NonAffine(Theorem),
    #[error("{0} requires exact gradients")]
    NoisyRecord(Theorem),
    #[error("expected {expected} trajectories")]
    WrongPath { expected: &'static str },
    #[error("ensemble of {got} runs is too small; need at least {min}")]
    EnsembleTooSmall { got: usize, min: usize },
    #[error("ensemble runs are not aligned on the same steps")]
    MisalignedEnsemble,
    #[error("missing constant: {0}")]
    MissingConstant(&'static str),
    #[error("trajectory never entered the certified sublevel set")]
    NoEntry,
    #[error(
        "{theorem}: {step_failures} step violation(s), {endpoint_failures} endpoint violation(s); first at index {first_index} (ratio {first_ratio:.6e}, target {first_target:.6e})"
    )]
    Violations {
        theorem: Theorem,
        step_failures: usize,
        endpoint_failures: usize,
        first_index: usize,
        first_ratio: f64,
        first_target: f64,
    },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
}

/// A failed step `values[index] > target * values[index - 1] + allowance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub ratio: f64,
    pub target: f64,
}

/// Endpoint bound `measured <= bound + slack` at step `n` / time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointCheck {
    pub n: usize,
    pub t: f64,
    pub measured: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovTrace {
    pub theorem: Theorem,
    /// Step numbers (discrete) or sample indices (flow).
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Per-entry contraction factor from the previous entry (NaN at 0).
    pub contraction_target: Vec<f64>,
    /// Additive allowance from the previous entry: noise terms plus slack.
    pub allowance: Vec<f64>,
    pub pass: Vec<bool>,
    pub noise_floor: f64,
    pub violations: Vec<Violation>,
    pub endpoint: Vec<EndpointCheck>,
}

impl LyapunovTrace {
    pub(crate) fn new(theorem: Theorem, noise_floor: f64) -> Self {
        Self {
            theorem,
            steps: Vec::new(),
            times: Vec::new(),
            values: Vec::new(),
            contraction_target: Vec::new(),
            allowance: Vec::new(),
            pass: Vec::new(),
            noise_floor,
            violations: Vec::new(),
            endpoint: Vec::new(),
        }
    }

    /// Append an entry; `step_ok` is the verdict on the step into it.
    pub(crate) fn push(
        &mut self,
        step: usize,
        t: f64,
        value: f64,
        target: f64,
        allowance: f64,
        step_ok: bool,
    ) {
        let index = self.values.len();
        if !step_ok {
            self.violations.push(Violation {
                index,
                ratio: self.ratio_to(value),
                target,
            });
        }
        self.steps.push(step);
        self.times.push(t);
        self.values.push(value);
        self.contraction_target.push(target);
        self.allowance.push(allowance);
        self.pass.push(step_ok);
    }

    fn ratio_to(&self, value: f64) -> f64 {
        match self.values.last() {
            Some(&prev) => value / prev,
            None => f64::NAN,
        }
    }

    pub fn ratios(&self) -> Vec<f64> {
        std::iter::once(f64::NAN)
            .chain(self.values.windows(2).map(|w| w[1] / w[0]))
            .take(self.values.len())
            .collect()
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios()
            .into_iter()
            .filter(|r| r.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.endpoint.iter().all(|e| e.pass)
    }

    pub fn ensure(&self) -> Result<(), LyapunovError> {
        if self.passed() {
            return Ok(());
        }
        let endpoint_failures = self.endpoint.iter().filter(|e| !e.pass).count();
        let (first_index, first_ratio, first_target) = match self.violations.first() {
            Some(v) => (v.index, v.ratio, v.target),
            None => {
                let e = self.endpoint.iter().find(|e| !e.pass).expect("a failure");
                (e.n, e.measured / e.bound, 1.0)
            }
        };
        Err(LyapunovError::Violations {
            theorem: self.theorem,
            step_failures: self.violations.len(),
            endpoint_failures,
            first_index,
            first_ratio,
            first_target,
        })
    }
}

/// Per-state Lyapunov values of a single record, using the functional that
/// matches its scheme. Gradient descent has none.
pub fn lyapunov_values(
    objective: &ObjectiveSpec,
    record: &TrajectoryRecord,
) -> Result<Vec<f64>, LyapunovError> {
    match record.params.scheme {
        Scheme::HeavyBallFlow => continuous::record_values(objective, record),
        _ => discrete::record_values(objective, record),
    }
}

/// `a <= b` up to a relative slack.
pub(crate) fn within(a: f64, b: f64, rel: f64) -> bool {
    a <= b + rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
