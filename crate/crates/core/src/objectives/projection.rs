use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{ObjectiveError, PlanarCurve};
use crate::linalg;

pub type ProjectionMap = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>, ObjectiveError> + Send + Sync>;

/// Nearest-point projection onto a planar curve, solved numerically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestPointSolver {
    pub curve: PlanarCurve,
    pub tolerance: f64,
}

impl NearestPointSolver {
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        let (_, p) = self.curve.nearest(x)?;
        Ok(p.to_vec())
    }
}

#[derive(Clone)]
pub enum ProjectionKind {
    /// `pi(x) = Pi x + x_star` with `Pi` the orthogonal projector onto the
    /// direction of the minimizing affine subspace and `Pi x_star = 0`.
    AffineLinear {
        pi: DMatrix<f64>,
        x_star: DVector<f64>,
    },
    AnalyticClosedForm(ProjectionMap),
    NumericNearest(NearestPointSolver),
}

impl fmt::Debug for ProjectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectionKind::AffineLinear { pi, x_star } => f
                .debug_struct("AffineLinear")
                .field("pi", &pi.as_slice())
                .field("x_star", &x_star.as_slice())
                .finish(),
            ProjectionKind::AnalyticClosedForm(_) => f.write_str("AnalyticClosedForm"),
            ProjectionKind::NumericNearest(s) => f.debug_tuple("NumericNearest").field(s).finish(),
        }
    }
}

/// Closest-point map onto the minimizer set, valid on `{f - inf f < sublevel_alpha}`.
#[derive(Debug, Clone)]
pub struct ProjectionSpec {
    pub kind: ProjectionKind,
    pub manifold_dim: usize,
    pub sublevel_alpha: f64,
}

impl ProjectionSpec {
    pub fn affine(
        pi: DMatrix<f64>,
        x_star: DVector<f64>,
        sublevel_alpha: f64,
    ) -> Result<Self, ObjectiveError> {
        let d = pi.nrows();
        if pi.ncols() != d || x_star.len() != d {
            return Err(ObjectiveError::invalid(
                "pi",
                format!("expected a {d}x{d} matrix and a length-{d} offset"),
            ));
        }
        let scale = pi.norm().max(1.0);
        if (&pi - pi.transpose()).norm() > 1e-10 * scale {
            return Err(ObjectiveError::invalid("pi", "not symmetric"));
        }
        if (&pi * &pi - &pi).norm() > 1e-10 * scale {
            return Err(ObjectiveError::invalid("pi", "not idempotent"));
        }
        if (&pi * &x_star).norm() > 1e-10 * x_star.norm().max(1.0) {
            return Err(ObjectiveError::invalid(
                "x_star",
                "must be orthogonal to the range of pi",
            ));
        }
        let rank = pi.trace().round();
        if rank < 0.0 || rank >= d as f64 {
            return Err(ObjectiveError::invalid(
                "pi",
                format!("rank {rank} must lie in [0, {d})"),
            ));
        }
        Ok(Self {
            kind: ProjectionKind::AffineLinear { pi, x_star },
            manifold_dim: rank as usize,
            sublevel_alpha,
        })
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        match &self.kind {
            ProjectionKind::AffineLinear { pi, x_star } => {
                if x.len() != pi.nrows() {
                    return Err(ObjectiveError::DimensionMismatch {
                        expected: pi.nrows(),
                        got: x.len(),
                    });
                }
                let v = pi * DVector::from_column_slice(x) + x_star;
                Ok(v.as_slice().to_vec())
            }
            ProjectionKind::AnalyticClosedForm(map) => map(x),
            ProjectionKind::NumericNearest(solver) => solver.project(x),
        }
    }

    /// The linear projector `Pi`, for affine minimizer sets.
    pub fn linear_projector(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            ProjectionKind::AffineLinear { pi, .. } => Some(pi),
            _ => None,
        }
    }

    /// Orthonormal basis of the tangent space of the minimizer set at `z`,
    /// a point on the set. Non-affine kinds differentiate the projection by
    /// central differences of size `delta`.
    pub fn tangent_basis(&self, z: &[f64], delta: f64) -> Result<Vec<Vec<f64>>, ObjectiveError> {
        let columns: Vec<Vec<f64>> = match &self.kind {
            ProjectionKind::AffineLinear { pi, .. } => (0..pi.ncols())
                .map(|j| pi.column(j).iter().copied().collect())
                .collect(),
            _ => {
                let mut cols = Vec::with_capacity(z.len());
                let mut probe = z.to_vec();
                for i in 0..z.len() {
                    probe[i] = z[i] + delta;
                    let up = self.project(&probe)?;
                    probe[i] = z[i] - delta;
                    let down = self.project(&probe)?;
                    probe[i] = z[i];
                    cols.push(linalg::scale(&linalg::sub(&up, &down), 0.5 / delta));
                }
                cols
            }
        };
        Ok(gram_schmidt(columns, self.manifold_dim))
    }

    /// Component of `w` normal to the minimizer set at `pi(x)`.
    pub fn normal_component(
        &self,
        x: &[f64],
        w: &[f64],
        delta: f64,
    ) -> Result<Vec<f64>, ObjectiveError> {
        if let Some(pi) = self.linear_projector() {
            let pw = pi * DVector::from_column_slice(w);
            return Ok(linalg::sub(w, pw.as_slice()));
        }
        let z = self.project(x)?;
        let basis = self.tangent_basis(&z, delta)?;
        let mut out = w.to_vec();
        for t in &basis {
            let c = linalg::dot(&out, t);
            out = linalg::axpy(&out, -c, t);
        }
        Ok(out)
    }
}

/// Orthonormalise the `keep` largest columns (by norm), greedily.
fn gram_schmidt(mut columns: Vec<Vec<f64>>, keep: usize) -> Vec<Vec<f64>> {
    columns.sort_by(|a, b| linalg::norm(b).total_cmp(&linalg::norm(a)));
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(keep);
    for mut c in columns {
        if basis.len() == keep {
            break;
        }
        for b in &basis {
            let k = linalg::dot(&c, b);
            c = linalg::axpy(&c, -k, b);
        }
        if let Some(u) = linalg::normalized(&c) {
            if linalg::norm(&c) > 1e-8 {
                basis.push(u);
            }
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_projection_onto_axis() {
        let pi = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let spec = ProjectionSpec::affine(pi, DVector::from_vec(vec![0.0, 2.0]), 1.0).unwrap();
        assert_eq!(spec.manifold_dim, 1);
        assert_eq!(spec.project(&[3.0, -1.0]).unwrap(), vec![3.0, 2.0]);
        let n = spec
            .normal_component(&[0.0, 0.0], &[1.0, 1.0], 1e-6)
            .unwrap();
        assert_eq!(n, vec![0.0, 1.0]);
    }

    #[test]
    fn rejects_non_projector() {
        let pi = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        assert!(ProjectionSpec::affine(pi, DVector::zeros(2), 1.0).is_err());
        let pi = DMatrix::identity(2, 2);
        assert!(ProjectionSpec::affine(pi, DVector::zeros(2), 1.0).is_err());
    }

    #[test]
    fn numeric_tangent_of_circle() {
        let spec = ProjectionSpec {
            kind: ProjectionKind::NumericNearest(NearestPointSolver {
                curve: PlanarCurve::Circle { radius: 1.0 },
                tolerance: 1e-12,
            }),
            manifold_dim: 1,
            sublevel_alpha: 0.1,
        };
        let basis = spec.tangent_basis(&[0.0, 1.0], 1e-6).unwrap();
        assert_eq!(basis.len(), 1);
        assert!((basis[0][0].abs() - 1.0).abs() < 1e-8);
        let n = spec
            .normal_component(&[0.0, 1.5], &[1.0, 1.0], 1e-6)
            .unwrap();
        assert!(n[0].abs() < 1e-8 && (n[1] - 1.0).abs() < 1e-8);
    }
}
