//! Objective functions with analytic gradients and known minimizer geometry.
//!
//! An [`ObjectiveSpec`] couples a value/gradient oracle ([`Landscape`]) with
//! whatever is known in closed form about the landscape: the infimum, an
//! upper curvature bound `L`, the strong-convexity-w.r.t.-closest-minimizer
//! constant `mu`, a lower Hessian bound `-eps`, and the closest-point
//! projection onto the set of minimizers.

mod catalog;
mod curves;
mod id;
mod projection;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use catalog::{
    make_degenerate_quadratic, make_diagonal_quadratic, make_ellipse_quartic, make_oscillatory_1d,
    make_product_structure, make_squared_distance, oscillatory_constants, OscillatoryConstants,
    ScaleFunction, SineScale, ELLIPSE_QUARTIC_ALPHA, ELLIPSE_QUARTIC_MU,
};
pub use curves::PlanarCurve;
pub use id::parse_objective_id;
pub use projection::{NearestPointSolver, ProjectionKind, ProjectionMap, ProjectionSpec};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {point:?} is outside the valid domain: {reason}")]
    Domain { point: Vec<f64>, reason: String },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("objective `{0}` has no minimizer projection")]
    NoProjection(String),
    #[error("unknown objective id `{0}`")]
    UnknownId(String),
    #[error("nearest-point solve did not converge for {point:?}")]
    SolverFailed { point: Vec<f64> },
}

impl ObjectiveError {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        ObjectiveError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(point: &[f64], reason: impl Into<String>) -> Self {
        ObjectiveError::Domain {
            point: point.to_vec(),
            reason: reason.into(),
        }
    }
}

/// Value and gradient oracle. Implementations are pure.
pub trait Landscape: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError>;
}

/// A landscape together with its analytically known constants.
#[derive(Clone)]
pub struct ObjectiveSpec {
    id: String,
    landscape: Arc<dyn Landscape>,
    /// `inf f`, when known.
    pub inf_value: Option<f64>,
    /// Upper curvature bound `L` used by the descent lemma.
    pub smoothness_l: Option<f64>,
    /// Constant `mu` of first-order strong convexity w.r.t. the closest
    /// minimizer on the projection's sublevel set.
    pub sc_mu: Option<f64>,
    /// `eps` such that `<grad f(x+v), v> >= f(x+v) - f(x) - eps/2 |v|^2`.
    pub neg_curvature_eps: Option<f64>,
    pub projection: Option<ProjectionSpec>,
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveSpec")
            .field("id", &self.id)
            .field("dim", &self.dim())
            .field("inf_value", &self.inf_value)
            .field("smoothness_l", &self.smoothness_l)
            .field("sc_mu", &self.sc_mu)
            .field("neg_curvature_eps", &self.neg_curvature_eps)
            .field("projection", &self.projection)
            .finish()
    }
}

impl ObjectiveSpec {
    pub fn new(id: impl Into<String>, landscape: Arc<dyn Landscape>) -> Self {
        Self {
            id: id.into(),
            landscape,
            inf_value: None,
            smoothness_l: None,
            sc_mu: None,
            neg_curvature_eps: None,
            projection: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.landscape.dim()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ObjectiveError> {
        if x.len() != self.dim() {
            return Err(ObjectiveError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_dim(x)?;
        self.landscape.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        self.check_dim(x)?;
        self.landscape.gradient(x)
    }

    /// `f(x) - inf f`; uses 0 as the infimum when it is not known.
    pub fn gap(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        Ok(self.value(x)? - self.inf_value.unwrap_or(0.0))
    }

    pub fn projection(&self) -> Result<&ProjectionSpec, ObjectiveError> {
        self.projection
            .as_ref()
            .ok_or_else(|| ObjectiveError::NoProjection(self.id.clone()))
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        self.check_dim(x)?;
        self.projection()?.project(x)
    }

    pub fn distance_to_minimizers(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        let p = self.project(x)?;
        Ok(crate::linalg::distance(x, &p))
    }

    /// Initial value of every Lyapunov functional used in this crate:
    /// `f(x0) - inf f + mu/2 dist(x0, M)^2`.
    pub fn lyapunov_seed(&self, x0: &[f64], mu: f64) -> Result<f64, ObjectiveError> {
        let d = self.distance_to_minimizers(x0)?;
        Ok(self.gap(x0)? + 0.5 * mu * d * d)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

/// Central-difference gradient, used for consistency checks.
pub fn finite_difference_gradient(
    objective: &ObjectiveSpec,
    x: &[f64],
    h: f64,
) -> Result<Vec<f64>, ObjectiveError> {
    let mut out = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = objective.value(&probe)?;
        probe[i] = x[i] - h;
        let down = objective.value(&probe)?;
        probe[i] = x[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_is_checked() {
        let obj = make_diagonal_quadratic(&[0.0, 1.0]).unwrap();
        assert_eq!(
            obj.value(&[1.0]),
            Err(ObjectiveError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn finite_difference_matches_quadratic() {
        let obj = make_diagonal_quadratic(&[0.0, 2.0]).unwrap();
        let g = finite_difference_gradient(&obj, &[1.0, 3.0], 1e-5).unwrap();
        assert!((g[0]).abs() < 1e-9);
        assert!((g[1] - 6.0).abs() < 1e-8);
    }
}
