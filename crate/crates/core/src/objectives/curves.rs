use std::f64::consts::TAU;

use super::ObjectiveError;

const SCAN_ANGLES: usize = 256;
const ANGLE_TOL: f64 = 1e-12;
const MAX_NEWTON_ITERS: usize = 100;

/// Closed planar curves parametrised by angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanarCurve {
    Circle {
        radius: f64,
    },
    /// `(a cos t, b sin t)`
    Ellipse {
        a: f64,
        b: f64,
    },
}

impl PlanarCurve {
    pub fn validate(&self) -> Result<(), ObjectiveError> {
        let ok = match *self {
            PlanarCurve::Circle { radius } => radius > 0.0 && radius.is_finite(),
            PlanarCurve::Ellipse { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(ObjectiveError::invalid(
                "curve",
                format!("{self:?} needs positive finite semi-axes"),
            ))
        }
    }

    fn axes(&self) -> (f64, f64) {
        match *self {
            PlanarCurve::Circle { radius } => (radius, radius),
            PlanarCurve::Ellipse { a, b } => (a, b),
        }
    }

    pub fn point(&self, theta: f64) -> [f64; 2] {
        let (a, b) = self.axes();
        [a * theta.cos(), b * theta.sin()]
    }

    pub fn unit_tangent(&self, theta: f64) -> [f64; 2] {
        let (a, b) = self.axes();
        let t = [-a * theta.sin(), b * theta.cos()];
        let n = t[0].hypot(t[1]);
        [t[0] / n, t[1] / n]
    }

    /// Smallest radius of curvature, i.e. the reach of the curve.
    pub fn reach(&self) -> f64 {
        let (a, b) = self.axes();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        lo * lo / hi
    }

    /// `x^2/a^2 + y^2/b^2`; below 1 means inside.
    pub fn level(&self, x: &[f64]) -> f64 {
        let (a, b) = self.axes();
        (x[0] / a).powi(2) + (x[1] / b).powi(2)
    }

    /// Nearest point on the curve and its angle in `[0, 2pi)`.
    ///
    /// Points inside the curve at distance at least the reach may have
    /// several nearest points and are rejected.
    pub fn nearest(&self, x: &[f64]) -> Result<(f64, [f64; 2]), ObjectiveError> {
        if x.len() != 2 {
            return Err(ObjectiveError::DimensionMismatch {
                expected: 2,
                got: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(ObjectiveError::domain(x, "non-finite coordinate"));
        }
        let (theta, p) = match *self {
            PlanarCurve::Circle { radius } => {
                let r = x[0].hypot(x[1]);
                if r == 0.0 {
                    return Err(ObjectiveError::domain(x, "centre of the circle"));
                }
                let theta = x[1].atan2(x[0]).rem_euclid(TAU);
                (theta, [radius * x[0] / r, radius * x[1] / r])
            }
            PlanarCurve::Ellipse { a, b } => {
                let theta = ellipse_nearest_angle(a, b, x)
                    .ok_or_else(|| ObjectiveError::SolverFailed { point: x.to_vec() })?;
                (theta, self.point(theta))
            }
        };
        if self.level(x) < 1.0 {
            let d = (x[0] - p[0]).hypot(x[1] - p[1]);
            if d >= self.reach() {
                return Err(ObjectiveError::domain(
                    x,
                    "inside the curve beyond its reach; nearest point not unique",
                ));
            }
        }
        Ok((theta, p))
    }
}

fn sq_dist(a: f64, b: f64, x: &[f64], t: f64) -> f64 {
    (a * t.cos() - x[0]).powi(2) + (b * t.sin() - x[1]).powi(2)
}

/// Derivative of half the squared distance w.r.t. the angle, and its derivative.
fn derivs(a: f64, b: f64, x: &[f64], t: f64) -> (f64, f64) {
    let (s, c) = t.sin_cos();
    let k = a * a - b * b;
    let d1 = a * x[0] * s - b * x[1] * c - k * s * c;
    let d2 = a * x[0] * c + b * x[1] * s - k * (c * c - s * s);
    (d1, d2)
}

/// Safeguarded Newton on `D'(t) = 0` inside `[lo, hi]` with `D'(lo) <= 0 <= D'(hi)`.
fn refine(a: f64, b: f64, x: &[f64], mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut t = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON_ITERS {
        let (d1, d2) = derivs(a, b, x, t);
        if d1 == 0.0 {
            return Some(t);
        }
        if d1 < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - d1 / d2;
        let next = if d2 > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - t).abs() <= ANGLE_TOL || hi - lo <= ANGLE_TOL {
            return Some(next);
        }
        t = next;
    }
    None
}

fn ellipse_nearest_angle(a: f64, b: f64, x: &[f64]) -> Option<f64> {
    let step = TAU / SCAN_ANGLES as f64;
    let dist: Vec<f64> = (0..SCAN_ANGLES)
        .map(|j| sq_dist(a, b, x, j as f64 * step))
        .collect();
    let mut best: Option<(f64, f64)> = None;
    let scale = a.max(b).powi(2) + x[0] * x[0] + x[1] * x[1];
    for j in 0..SCAN_ANGLES {
        let prev = dist[(j + SCAN_ANGLES - 1) % SCAN_ANGLES];
        let next = dist[(j + 1) % SCAN_ANGLES];
        if dist[j] > prev || dist[j] > next {
            continue;
        }
        let centre = j as f64 * step;
        let (lo, hi) = (centre - step, centre + step);
        let t = if derivs(a, b, x, lo).0 <= 0.0 && derivs(a, b, x, hi).0 >= 0.0 {
            refine(a, b, x, lo, hi)?
        } else {
            centre
        };
        let t = t.rem_euclid(TAU);
        let d = sq_dist(a, b, x, t);
        best = match best {
            None => Some((t, d)),
            Some((bt, bd)) => {
                if d < bd - 1e-14 * scale || ((d - bd).abs() <= 1e-14 * scale && t < bt) {
                    Some((t, d))
                } else {
                    Some((bt, bd))
                }
            }
        };
    }
    best.map(|(t, _)| t)
}
