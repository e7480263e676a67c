//! Momentum methods on non-convex landscapes whose minimizers form a manifold.
//!
//! The crate is organised around five layers:
//!
//! - [`objectives`]: benchmark landscapes with analytic gradients, their
//!   minimizer manifolds and closest-point projections.
//! - [`noise`]: seeded stochastic gradient estimators with additive and
//!   multiplicative variance.
//! - [`optimizers`]: gradient descent, Nesterov time-stepping (constant and
//!   decreasing steps), AGNES, and the heavy-ball ODE flow.
//! - [`lyapunov`]: Lyapunov functionals evaluated along trajectories, with
//!   per-step contraction certificates.
//! - [`geometry`]: empirical PL / strong-convexity-w.r.t.-minimizer /
//!   quasar constants, line probes, curvature probes and the projection
//!   monotonicity check.
//!
//! [`harness`] ties these together into configurable experiments, figure
//! reproductions and certification runs.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod lyapunov;
pub mod noise;
pub mod objectives;
pub mod optimizers;
pub mod stats;

pub use noise::{NoiseKind, NoiseModel};
pub use objectives::{ObjectiveError, ObjectiveSpec, ProjectionKind, ProjectionSpec};
pub use optimizers::{OptimizerParams, Scheme, TrajectoryRecord};
