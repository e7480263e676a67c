use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{outside, GeometryError, Region, MIN_SAMPLES};
use crate::linalg;
use crate::objectives::ObjectiveSpec;

pub const DEFAULT_PROBE_STEP: f64 = 0.01;

/// One row of a line probe along `phi(t) = f(w + t d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRow {
    pub t: f64,
    pub phi: f64,
    /// Central difference `(phi(t+h) - phi(t-h)) / 2h`.
    pub dphi: f64,
    /// Second difference `(phi(t+h) - 2 phi(t) + phi(t-h)) / h^2`.
    pub d2phi: f64,
    /// `2 (phi'(t) t - phi(t) + inf phi) / t^2`, with `inf phi` the grid
    /// minimum; absent for `|t| < 10 h`.
    pub mu_estimate: Option<f64>,
}

pub fn line_probe(
    objective: &ObjectiveSpec,
    w: &[f64],
    direction: &[f64],
    t_grid: &[f64],
    h: f64,
) -> Result<Vec<ProbeRow>, GeometryError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(GeometryError::InvalidStep(h));
    }
    let dim = objective.dim();
    if direction.len() != dim || (linalg::norm(direction) - 1.0).abs() > 1e-9 {
        return Err(GeometryError::InvalidDirection { dim });
    }
    let phi = |t: f64| -> Result<f64, GeometryError> {
        let x = linalg::axpy(w, t, direction);
        objective.value(&x).map_err(|e| outside(&x, e))
    };
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let (p, up, down) = (phi(t)?, phi(t + h)?, phi(t - h)?);
        rows.push(ProbeRow {
            t,
            phi: p,
            dphi: (up - down) / (2.0 * h),
            d2phi: (up - 2.0 * p + down) / (h * h),
            mu_estimate: None,
        });
    }
    let inf_phi = rows.iter().map(|r| r.phi).fold(f64::INFINITY, f64::min);
    for r in &mut rows {
        if r.t.abs() >= 10.0 * h {
            r.mu_estimate = Some(2.0 * (r.dphi * r.t - r.phi + inf_phi) / (r.t * r.t));
        }
    }
    Ok(rows)
}

/// Largest `eps` needed for
/// `<grad f(x+v), v> >= f(x+v) - f(x) - eps/2 |v|^2` over sampled pairs,
/// with `x` from `region` and `|v| = 1e-3 max(|x|, 1e-3)` in a random
/// direction. Rounding-level violations count as zero.
pub fn probe_negative_curvature(
    objective: &ObjectiveSpec,
    region: &Region,
    n_samples: usize,
    seed: u64,
) -> Result<f64, GeometryError> {
    if n_samples < MIN_SAMPLES {
        return Err(GeometryError::TooFewSamples {
            got: n_samples,
            min: MIN_SAMPLES,
        });
    }
    let points = region.sample(objective, n_samples, seed)?;
    let dim = objective.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5851_f42d_4c95_7f2d));
    let dirs: Vec<Vec<f64>> = (0..n_samples)
        .map(|_| loop {
            let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            if let Some(u) = linalg::normalized(&g) {
                break u;
            }
        })
        .collect();
    let needed = points
        .par_iter()
        .zip(dirs.par_iter())
        .map(|(x, u)| -> Result<f64, GeometryError> {
            let v = linalg::scale(u, 1e-3 * linalg::norm(x).max(1e-3));
            let xv = linalg::add(x, &v);
            let fx = objective.value(x).map_err(|e| outside(x, e))?;
            let fxv = objective.value(&xv).map_err(|e| outside(&xv, e))?;
            let g = objective.gradient(&xv).map_err(|e| outside(&xv, e))?;
            let excess = fxv - fx - linalg::dot(&g, &v);
            let floor = 8.0 * f64::EPSILON * (fx.abs() + fxv.abs());
            Ok(if excess <= floor {
                0.0
            } else {
                2.0 * excess / linalg::norm_sq(&v)
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(needed.into_iter().fold(0.0, f64::max))
}
