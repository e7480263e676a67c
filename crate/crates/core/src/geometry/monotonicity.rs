use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{outside, GeometryError};
use crate::linalg;
use crate::objectives::ProjectionSpec;

/// Largest parameter spacing accepted by the finite differences.
pub const MAX_CURVE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// `min <x', z'>` over interior samples, `z = pi(x)`.
    pub min_inner: f64,
    /// `max |x'| |z'|`, the normalisation of the pass threshold.
    pub max_norm_product: f64,
    pub pass: bool,
    pub samples: usize,
}

/// Check `<x'(t), d/dt pi(x(t))> >= 0` along a curve sampled at spacing `dt`,
/// using central differences; passes iff the minimum is at least
/// `-1e-6 max |x'| |z'|`.
pub fn check_projection_monotonicity(
    projection: &ProjectionSpec,
    curve: &[Vec<f64>],
    dt: f64,
) -> Result<MonotonicityReport, GeometryError> {
    if !(dt > 0.0 && dt <= MAX_CURVE_STEP) {
        return Err(GeometryError::CurveSpacing {
            dt,
            max: MAX_CURVE_STEP,
        });
    }
    if curve.len() < 3 {
        return Err(GeometryError::CurveTooShort(curve.len()));
    }
    let z = curve
        .iter()
        .map(|x| projection.project(x).map_err(|e| outside(x, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut min_inner = f64::INFINITY;
    let mut max_norm_product: f64 = 0.0;
    for i in 1..curve.len() - 1 {
        let xd = linalg::scale(&linalg::sub(&curve[i + 1], &curve[i - 1]), 0.5 / dt);
        let zd = linalg::scale(&linalg::sub(&z[i + 1], &z[i - 1]), 0.5 / dt);
        min_inner = min_inner.min(linalg::dot(&xd, &zd));
        max_norm_product = max_norm_product.max(linalg::norm(&xd) * linalg::norm(&zd));
    }
    Ok(MonotonicityReport {
        min_inner,
        max_norm_product,
        pass: min_inner >= -1e-6 * max_norm_product,
        samples: curve.len(),
    })
}

fn catmull_rom(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], s: f64) -> Vec<f64> {
    let (s2, s3) = (s * s, s * s * s);
    (0..2)
        .map(|k| {
            0.5 * (2.0 * p1[k]
                + (-p0[k] + p2[k]) * s
                + (2.0 * p0[k] - 5.0 * p1[k] + 4.0 * p2[k] - p3[k]) * s2
                + (-p0[k] + 3.0 * p1[k] - 3.0 * p2[k] + p3[k]) * s3)
        })
        .collect()
}

/// A random planar cubic (Catmull-Rom) spline through control points with
/// radii in `[r_inner, r_outer]` around the origin, sampled at `samples`
/// equally spaced parameters of `[0, 1]` (spacing `1 / (samples - 1)`).
pub fn random_tube_curve(seed: u64, r_inner: f64, r_outer: f64, samples: usize) -> Vec<Vec<f64>> {
    const SEGMENTS: usize = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut angle = rng.random_range(0.0..std::f64::consts::TAU);
    let control: Vec<[f64; 2]> = (0..SEGMENTS + 3)
        .map(|_| {
            let r = rng.random_range(r_inner..=r_outer);
            let p = [r * angle.cos(), r * angle.sin()];
            angle += rng.random_range(-0.8..0.8);
            p
        })
        .collect();
    (0..samples)
        .map(|i| {
            let u = i as f64 / (samples - 1) as f64 * SEGMENTS as f64;
            let seg = (u.floor() as usize).min(SEGMENTS - 1);
            let s = u - seg as f64;
            catmull_rom(
                control[seg],
                control[seg + 1],
                control[seg + 2],
                control[seg + 3],
                s,
            )
        })
        .collect()
}
