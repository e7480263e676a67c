use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{
    Landscape, NearestPointSolver, ObjectiveError, ObjectiveSpec, PlanarCurve, ProjectionKind,
    ProjectionSpec,
};
use crate::linalg;

fn check_finite(name: &str, v: f64) -> Result<(), ObjectiveError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ObjectiveError::invalid(name, "must be finite"))
    }
}

// ---------------------------------------------------------------------------
// f(x) = x^2/2 + (eps/2) x^2 sin(2R log|x|)

#[derive(Debug, Clone, Copy)]
struct Oscillatory1d {
    eps: f64,
    r: f64,
}

impl Oscillatory1d {
    fn phase(&self, x: f64) -> f64 {
        2.0 * self.r * x.abs().ln()
    }
}

impl Landscape for Oscillatory1d {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        let x = x[0];
        if x == 0.0 {
            return Ok(0.0);
        }
        Ok(0.5 * x * x * (1.0 + self.eps * self.phase(x).sin()))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        let x = x[0];
        if x == 0.0 {
            return Ok(vec![0.0]);
        }
        let (s, c) = self.phase(x).sin_cos();
        Ok(vec![(1.0 + self.eps * s + self.r * self.eps * c) * x])
    }
}

/// Closed-form constants of the oscillatory 1-D objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatoryConstants {
    /// `1 + eps sqrt(1 + 5R^2 + 4R^4)`, the sup of `f''`.
    pub smoothness_l: f64,
    /// `1 - eps sqrt(1 + 4R^2)`; may be non-positive.
    pub sc_threshold: f64,
    /// `(1 - eps sqrt(1 + R^2))^2 / (1 + eps)` when `eps sqrt(1+R^2) < 1`.
    pub pl_constant: Option<f64>,
    /// Whether the function is quasar-convex w.r.t. 0 for some exponent.
    pub quasar_convex: bool,
    /// `max(0, -inf f'')`.
    pub neg_curvature_eps: f64,
}

pub fn oscillatory_constants(eps: f64, r: f64) -> OscillatoryConstants {
    let r2 = r * r;
    let l = 1.0 + eps * (1.0 + 5.0 * r2 + 4.0 * r2 * r2).sqrt();
    let pl_root = 1.0 - eps * (1.0 + r2).sqrt();
    OscillatoryConstants {
        smoothness_l: l,
        sc_threshold: 1.0 - eps * (1.0 + 4.0 * r2).sqrt(),
        pl_constant: (pl_root > 0.0).then(|| pl_root * pl_root / (1.0 + eps)),
        quasar_convex: eps < 1.0 && eps * eps * r2 < 1.0 - eps * eps,
        neg_curvature_eps: (l - 2.0).max(0.0),
    }
}

pub fn make_oscillatory_1d(eps: f64, r: f64) -> Result<ObjectiveSpec, ObjectiveError> {
    check_finite("eps", eps)?;
    check_finite("R", r)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ObjectiveError::invalid("eps", "must lie in (0, 1)"));
    }
    if !(r > 0.0) {
        return Err(ObjectiveError::invalid("R", "must be positive"));
    }
    let c = oscillatory_constants(eps, r);
    let projection = ProjectionSpec {
        kind: ProjectionKind::AnalyticClosedForm(Arc::new(|_: &[f64]| Ok(vec![0.0]))),
        manifold_dim: 0,
        sublevel_alpha: f64::INFINITY,
    };
    let mut spec = ObjectiveSpec::new(
        format!("oscillatory1d{{{eps},{r}}}"),
        Arc::new(Oscillatory1d { eps, r }),
    );
    spec.inf_value = Some(0.0);
    spec.smoothness_l = Some(c.smoothness_l);
    spec.sc_mu = (c.sc_threshold > 0.0).then_some(c.sc_threshold);
    spec.neg_curvature_eps = Some(c.neg_curvature_eps);
    spec.projection = Some(projection);
    Ok(spec)
}

// ---------------------------------------------------------------------------
// f(x, y) = s(x) * (mu_q / 2) |y|^2

/// Positive scale factor `s` on the manifold coordinates.
pub trait ScaleFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, t: &[f64]) -> f64;
    fn gradient(&self, t: &[f64]) -> Vec<f64>;
    /// A lower bound `a` with `s >= a` everywhere.
    fn lower_bound(&self) -> f64;
}

/// `offset + amplitude * mean_i sin(t_i)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineScale {
    pub k: usize,
    pub offset: f64,
    pub amplitude: f64,
}

impl ScaleFunction for SineScale {
    fn dim(&self) -> usize {
        self.k
    }

    fn value(&self, t: &[f64]) -> f64 {
        self.offset + self.amplitude * t.iter().map(|v| v.sin()).sum::<f64>() / self.k as f64
    }

    fn gradient(&self, t: &[f64]) -> Vec<f64> {
        let w = self.amplitude / self.k as f64;
        t.iter().map(|v| w * v.cos()).collect()
    }

    fn lower_bound(&self) -> f64 {
        self.offset - self.amplitude.abs()
    }
}

#[derive(Debug)]
struct ProductStructure {
    d: usize,
    scale: Arc<dyn ScaleFunction>,
    quad_mu: f64,
}

impl Landscape for ProductStructure {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        let k = self.scale.dim();
        let (t, y) = x.split_at(k);
        Ok(self.scale.value(t) * 0.5 * self.quad_mu * linalg::norm_sq(y))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        let k = self.scale.dim();
        let (t, y) = x.split_at(k);
        let q = 0.5 * self.quad_mu * linalg::norm_sq(y);
        let s = self.scale.value(t);
        let mut g: Vec<f64> = self.scale.gradient(t).into_iter().map(|v| v * q).collect();
        g.extend(y.iter().map(|v| s * self.quad_mu * v));
        Ok(g)
    }
}

/// Product of a positive scale on the first `k` coordinates and a quadratic
/// in the remaining `d - k`. Minimizers: `{y = 0}`.
pub fn make_product_structure(
    d: usize,
    scale: Arc<dyn ScaleFunction>,
    quad_mu: f64,
) -> Result<ObjectiveSpec, ObjectiveError> {
    let k = scale.dim();
    if k == 0 || k >= d {
        return Err(ObjectiveError::invalid(
            "k",
            format!("need 0 < k < d, got k = {k}, d = {d}"),
        ));
    }
    check_finite("quad_mu", quad_mu)?;
    if quad_mu <= 0.0 {
        return Err(ObjectiveError::invalid("quad_mu", "must be positive"));
    }
    let a = scale.lower_bound();
    if !(a > 0.0) {
        return Err(ObjectiveError::invalid(
            "scale",
            format!("lower bound {a} must be positive"),
        ));
    }
    let mut pi = DMatrix::zeros(d, d);
    for i in 0..k {
        pi[(i, i)] = 1.0;
    }
    let projection = ProjectionSpec::affine(pi, DVector::zeros(d), f64::INFINITY)?;
    let mut spec = ObjectiveSpec::new(
        format!("product{{{d},{k},{quad_mu}}}"),
        Arc::new(ProductStructure { d, scale, quad_mu }),
    );
    spec.inf_value = Some(0.0);
    spec.sc_mu = Some(a * quad_mu);
    spec.projection = Some(projection);
    Ok(spec)
}

// ---------------------------------------------------------------------------
// f(x) = (mu/2) dist(x, C)^2 for a planar curve C

#[derive(Debug, Clone, Copy)]
struct SquaredDistance {
    curve: PlanarCurve,
    mu: f64,
}

impl Landscape for SquaredDistance {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        let (_, p) = self.curve.nearest(x)?;
        Ok(0.5 * self.mu * ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2)))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        let (_, p) = self.curve.nearest(x)?;
        Ok(vec![self.mu * (x[0] - p[0]), self.mu * (x[1] - p[1])])
    }
}

/// `(mu/2) dist(x, C)^2`. `L = mu` is a global upper curvature bound since
/// `|x|^2/2 - dist^2/2` is convex; `eps = mu` bounds the negative curvature
/// within half the reach of the curve.
pub fn make_squared_distance(curve: PlanarCurve, mu: f64) -> Result<ObjectiveSpec, ObjectiveError> {
    curve.validate()?;
    check_finite("mu", mu)?;
    if mu <= 0.0 {
        return Err(ObjectiveError::invalid("mu", "must be positive"));
    }
    let half_reach = 0.5 * curve.reach();
    let alpha = 0.5 * mu * half_reach * half_reach;
    let (id, kind) = match curve {
        PlanarCurve::Circle { radius } => {
            let map = move |x: &[f64]| curve.nearest(x).map(|(_, p)| p.to_vec());
            (
                format!("sqdist-circle{{{radius},{mu}}}"),
                ProjectionKind::AnalyticClosedForm(Arc::new(map)),
            )
        }
        PlanarCurve::Ellipse { a, b } => (
            format!("sqdist-ellipse{{{a},{b},{mu}}}"),
            ProjectionKind::NumericNearest(NearestPointSolver {
                curve,
                tolerance: 1e-12,
            }),
        ),
    };
    let mut spec = ObjectiveSpec::new(id, Arc::new(SquaredDistance { curve, mu }));
    spec.inf_value = Some(0.0);
    spec.smoothness_l = Some(mu);
    spec.sc_mu = Some(mu);
    spec.neg_curvature_eps = Some(mu);
    spec.projection = Some(ProjectionSpec {
        kind,
        manifold_dim: 1,
        sublevel_alpha: alpha,
    });
    Ok(spec)
}

// ---------------------------------------------------------------------------
// f(x, y) = (x^2/2 + 3y^2 - 1)^2

#[derive(Debug, Clone, Copy)]
struct EllipseQuartic;

impl EllipseQuartic {
    fn q(x: &[f64]) -> f64 {
        0.5 * x[0] * x[0] + 3.0 * x[1] * x[1] - 1.0
    }
}

impl Landscape for EllipseQuartic {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        Ok(Self::q(x).powi(2))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        let q = Self::q(x);
        Ok(vec![2.0 * q * x[0], 12.0 * q * x[1]])
    }
}

/// Sublevel on which the quartic's projection and constants are used.
pub const ELLIPSE_QUARTIC_ALPHA: f64 = 0.05;
/// Conservative first-order strong-convexity constant on the sublevel
/// `f < 0.05`; sampling gives about 2.97.
pub const ELLIPSE_QUARTIC_MU: f64 = 2.5;

/// Quartic whose minimizers form the ellipse `x^2/2 + 3y^2 = 1`.
pub fn make_ellipse_quartic() -> ObjectiveSpec {
    let curve = PlanarCurve::Ellipse {
        a: 2f64.sqrt(),
        b: 1.0 / 3f64.sqrt(),
    };
    let mut spec = ObjectiveSpec::new("ellipse-quartic", Arc::new(EllipseQuartic));
    spec.inf_value = Some(0.0);
    spec.sc_mu = Some(ELLIPSE_QUARTIC_MU);
    // Hessian >= 2q diag(1, 6) >= -12 sqrt(alpha) on the sublevel.
    spec.neg_curvature_eps = Some(12.0 * ELLIPSE_QUARTIC_ALPHA.sqrt());
    spec.projection = Some(ProjectionSpec {
        kind: ProjectionKind::NumericNearest(NearestPointSolver {
            curve,
            tolerance: 1e-12,
        }),
        manifold_dim: 1,
        sublevel_alpha: ELLIPSE_QUARTIC_ALPHA,
    });
    spec
}

// ---------------------------------------------------------------------------
// f(x) = x^T A x / 2 with A positive semidefinite and singular

#[derive(Debug, Clone)]
struct Quadratic {
    a: DMatrix<f64>,
}

impl Landscape for Quadratic {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        let v = DVector::from_column_slice(x);
        Ok(0.5 * v.dot(&(&self.a * &v)))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        let v = DVector::from_column_slice(x);
        Ok((&self.a * v).as_slice().to_vec())
    }
}

pub fn make_degenerate_quadratic(a: DMatrix<f64>) -> Result<ObjectiveSpec, ObjectiveError> {
    let d = a.nrows();
    if d == 0 || a.ncols() != d {
        return Err(ObjectiveError::invalid(
            "A",
            "must be a non-empty square matrix",
        ));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(ObjectiveError::invalid("A", "must be finite"));
    }
    let scale = a.norm().max(f64::MIN_POSITIVE);
    if (&a - a.transpose()).norm() > 1e-12 * scale {
        return Err(ObjectiveError::invalid("A", "must be symmetric"));
    }
    let eig = SymmetricEigen::new(a.clone());
    let top = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * top.max(1.0);
    if eig.eigenvalues.iter().any(|&v| v < -tol) {
        return Err(ObjectiveError::invalid(
            "A",
            "must be positive semidefinite",
        ));
    }
    if !(top > tol) {
        return Err(ObjectiveError::invalid("A", "must not vanish"));
    }
    let mut pi = DMatrix::zeros(d, d);
    let mut smallest_positive = f64::INFINITY;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= tol {
            let u = eig.eigenvectors.column(i);
            pi += u * u.transpose();
        } else {
            smallest_positive = smallest_positive.min(lambda);
        }
    }
    // Snap the projector so that it is exactly symmetric.
    let pi = 0.5 * (&pi + pi.transpose());
    let projection = ProjectionSpec::affine(pi, DVector::zeros(d), f64::INFINITY)?;
    let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || a[(i, j)] == 0.0));
    let id = if diagonal {
        let diag: Vec<String> = a.diagonal().iter().map(|v| v.to_string()).collect();
        format!("quad{{{}}}", diag.join(","))
    } else {
        format!("quad-matrix{{{d}}}")
    };
    let mut spec = ObjectiveSpec::new(id, Arc::new(Quadratic { a }));
    spec.inf_value = Some(0.0);
    spec.smoothness_l = Some(top);
    spec.sc_mu = Some(smallest_positive);
    spec.neg_curvature_eps = Some(0.0);
    spec.projection = Some(projection);
    Ok(spec)
}

pub fn make_diagonal_quadratic(eigenvalues: &[f64]) -> Result<ObjectiveSpec, ObjectiveError> {
    make_degenerate_quadratic(DMatrix::from_diagonal(&DVector::from_column_slice(
        eigenvalues,
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::finite_difference_gradient;

    #[test]
    fn oscillatory_values() {
        let f = make_oscillatory_1d(0.1, 2.0).unwrap();
        assert_eq!(f.value(&[0.0]).unwrap(), 0.0);
        let x: f64 = 0.7;
        let expect = 0.5 * x * x * (1.0 + 0.1 * (4.0 * x.ln()).sin());
        assert!((f.value(&[x]).unwrap() - expect).abs() < 1e-16);
        assert_eq!(f.value(&[-x]).unwrap(), f.value(&[x]).unwrap());
        assert_eq!(f.gradient(&[-x]).unwrap()[0], -f.gradient(&[x]).unwrap()[0]);
    }

    #[test]
    fn oscillatory_constants_closed_form() {
        let f = make_oscillatory_1d(0.1, 2.0).unwrap();
        assert!((f.smoothness_l.unwrap() - (1.0 + 0.1 * 85f64.sqrt())).abs() < 1e-15);
        assert!((f.sc_mu.unwrap() - (1.0 - 0.1 * 17f64.sqrt())).abs() < 1e-15);
        let f = make_oscillatory_1d(0.3, 2.0).unwrap();
        assert!(f.sc_mu.is_none());
        let c = oscillatory_constants(0.3, 2.0);
        assert!(c.pl_constant.unwrap() > 0.0);
        assert!(make_oscillatory_1d(-0.1, 1.0).is_err());
        assert!(make_oscillatory_1d(1.0, 1.0).is_err());
        assert!(make_oscillatory_1d(0.1, 0.0).is_err());
    }

    #[test]
    fn quasar_threshold() {
        // eps^2 R^2 < 1 - eps^2
        assert!(oscillatory_constants(0.1, 9.9).quasar_convex);
        assert!(!oscillatory_constants(0.1, 10.0).quasar_convex);
    }

    #[test]
    fn product_structure_example() {
        let scale = Arc::new(SineScale {
            k: 1,
            offset: 2.0,
            amplitude: 1.0,
        });
        let f = make_product_structure(2, scale, 1.0).unwrap();
        assert_eq!(f.value(&[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(f.sc_mu, Some(1.0));
        assert_eq!(f.project(&[0.3, 1.0]).unwrap(), vec![0.3, 0.0]);
        let g = f.gradient(&[0.4, -0.7]).unwrap();
        let fd = finite_difference_gradient(&f, &[0.4, -0.7], 1e-6).unwrap();
        assert!(linalg::distance(&g, &fd) < 1e-8);
    }

    #[test]
    fn product_rejects_bad_parameters() {
        let scale = Arc::new(SineScale {
            k: 1,
            offset: 0.5,
            amplitude: 1.0,
        });
        assert!(make_product_structure(2, scale, 1.0).is_err());
        let scale = Arc::new(SineScale {
            k: 2,
            offset: 2.0,
            amplitude: 1.0,
        });
        assert!(make_product_structure(2, scale, 1.0).is_err());
    }

    #[test]
    fn squared_distance_circle() {
        let f = make_squared_distance(PlanarCurve::Circle { radius: 1.0 }, 1.0).unwrap();
        assert_eq!(f.value(&[2.0, 0.0]).unwrap(), 0.5);
        assert_eq!(f.project(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(
            f.value(&[0.0, 0.0]),
            Err(ObjectiveError::Domain { .. })
        ));
        let alpha = f.projection.as_ref().unwrap().sublevel_alpha;
        assert!((alpha - 0.125).abs() < 1e-15);
    }

    #[test]
    fn ellipse_quartic_vanishes_on_ellipse() {
        let f = make_ellipse_quartic();
        let p = [2f64.sqrt() * 0.3f64.cos(), 0.3f64.sin() / 3f64.sqrt()];
        assert!(f.value(&p).unwrap() < 1e-30);
        let g = f.gradient(&[1.0, 0.5]).unwrap();
        let fd = finite_difference_gradient(&f, &[1.0, 0.5], 1e-6).unwrap();
        assert!(linalg::distance(&g, &fd) < 1e-8);
    }

    #[test]
    fn degenerate_quadratic_constants() {
        let f = make_diagonal_quadratic(&[0.0, 0.01, 4.0]).unwrap();
        assert_eq!(f.sc_mu, Some(0.01));
        assert_eq!(f.smoothness_l, Some(4.0));
        assert_eq!(f.projection.as_ref().unwrap().manifold_dim, 1);
        assert_eq!(f.project(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(make_diagonal_quadratic(&[-1.0, 1.0]).is_err());
    }

    #[test]
    fn rotated_quadratic_kernel() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let f = make_degenerate_quadratic(a).unwrap();
        let p = f.project(&[1.0, 0.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] + 0.5).abs() < 1e-12);
        assert!((f.sc_mu.unwrap() - 2.0).abs() < 1e-12);
    }
}
