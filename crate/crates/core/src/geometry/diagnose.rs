use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{outside, GeometryError, Region};
use crate::linalg;
use crate::objectives::ObjectiveSpec;

pub const MIN_SAMPLES: usize = 1000;
/// Points with `f - inf f` at or below this are left out of quotients.
pub const GAP_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryReport {
    /// Sample infimum of `|grad f|^2 / (2 (f - inf f))`.
    pub pl_constant_emp: f64,
    /// Sample infimum of
    /// `2 (<grad f(x), x - pi(x)> - (f(x) - f(pi(x)))) / |x - pi(x)|^2`.
    pub sc_wrt_min_emp: f64,
    /// Largest `gamma` in `(0, 1]` with `<grad f(x), x - pi(x)> >= gamma (f(x) - inf f)`
    /// on every sample, if any.
    pub quasar_gamma: Option<f64>,
    /// Smallest sampled second-difference curvature `v^T D^2 f v / |v|^2`.
    pub neg_eig_bound: f64,
    /// Largest sampled `|v^T D^2 f v| / |v|^2`.
    pub curvature_sup: f64,
    pub sample_region: String,
    pub n_samples: usize,
    /// Samples skipped by the `f - inf f <= 1e-12` guard.
    pub n_excluded: usize,
}

#[derive(Debug, Clone, Copy)]
struct Local {
    pl: f64,
    sc: f64,
    quasar: f64,
    curv_min: f64,
    curv_max: f64,
    excluded: bool,
}

fn second_difference(
    objective: &ObjectiveSpec,
    x: &[f64],
    fx: f64,
    dir: &[f64],
) -> Result<f64, GeometryError> {
    let h = 1e-4 * linalg::norm(x).max(1e-8);
    let up = linalg::axpy(x, h, dir);
    let down = linalg::axpy(x, -h, dir);
    let fu = objective.value(&up).map_err(|e| outside(&up, e))?;
    let fd = objective.value(&down).map_err(|e| outside(&down, e))?;
    Ok((fu - 2.0 * fx + fd) / (h * h))
}

fn local(
    objective: &ObjectiveSpec,
    x: &[f64],
    extra_dir: Option<&[f64]>,
    alpha: f64,
) -> Result<Local, GeometryError> {
    let inf = objective.inf_value.unwrap_or(0.0);
    let fx = objective.value(x).map_err(|e| outside(x, e))?;
    let gap = fx - inf;
    if gap >= alpha {
        return Err(GeometryError::OutsideValidity {
            point: x.to_vec(),
            reason: format!("f - inf f = {gap} leaves the sublevel set {{f - inf f < {alpha}}}"),
        });
    }
    let grad = objective.gradient(x).map_err(|e| outside(x, e))?;
    let p = objective.project(x).map_err(|e| outside(x, e))?;
    let fp = objective.value(&p).map_err(|e| outside(&p, e))?;
    let r = linalg::sub(x, &p);
    let r2 = linalg::norm_sq(&r);
    let inner = linalg::dot(&grad, &r);

    let mut curv_min = f64::INFINITY;
    let mut curv_max: f64 = 0.0;
    let mut e = vec![0.0; x.len()];
    for i in 0..x.len() {
        e[i] = 1.0;
        let q = second_difference(objective, x, fx, &e)?;
        e[i] = 0.0;
        curv_min = curv_min.min(q);
        curv_max = curv_max.max(q.abs());
    }
    if let Some(d) = extra_dir {
        let q = second_difference(objective, x, fx, d)?;
        curv_min = curv_min.min(q);
        curv_max = curv_max.max(q.abs());
    }

    let excluded = gap <= GAP_GUARD || r2 == 0.0;
    let (pl, sc, quasar) = if excluded {
        (f64::INFINITY, f64::INFINITY, f64::INFINITY)
    } else {
        (
            linalg::norm_sq(&grad) / (2.0 * gap),
            2.0 * (inner - (fx - fp)) / r2,
            inner / gap,
        )
    };
    Ok(Local {
        pl,
        sc,
        quasar,
        curv_min,
        curv_max,
        excluded,
    })
}

/// Sample `n_samples` points of `region` and report the empirical constants.
///
/// Fails if any sample lies where the projection is undefined or outside
/// the projection's certified sublevel set.
pub fn diagnose(
    objective: &ObjectiveSpec,
    region: &Region,
    n_samples: usize,
    seed: u64,
) -> Result<GeometryReport, GeometryError> {
    if n_samples < MIN_SAMPLES {
        return Err(GeometryError::TooFewSamples {
            got: n_samples,
            min: MIN_SAMPLES,
        });
    }
    let alpha = objective.projection()?.sublevel_alpha;
    let points = region.sample(objective, n_samples, seed)?;
    let dim = objective.dim();
    // Coordinate directions cover dimension one; add a random one otherwise.
    let dirs: Vec<Option<Vec<f64>>> = if dim > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        (0..n_samples)
            .map(|_| {
                let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                linalg::normalized(&g)
            })
            .collect()
    } else {
        vec![None; n_samples]
    };
    let locals = points
        .par_iter()
        .zip(dirs.par_iter())
        .map(|(x, d)| local(objective, x, d.as_deref(), alpha))
        .collect::<Result<Vec<_>, _>>()?;

    let mut pl = f64::INFINITY;
    let mut sc = f64::INFINITY;
    let mut quasar = f64::INFINITY;
    let mut curv_min = f64::INFINITY;
    let mut curv_max: f64 = 0.0;
    let mut excluded = 0;
    for l in &locals {
        pl = pl.min(l.pl);
        sc = sc.min(l.sc);
        quasar = quasar.min(l.quasar);
        curv_min = curv_min.min(l.curv_min);
        curv_max = curv_max.max(l.curv_max);
        excluded += usize::from(l.excluded);
    }
    if excluded == n_samples {
        return Err(GeometryError::Region(
            "every sample sits on the minimizer set".into(),
        ));
    }
    Ok(GeometryReport {
        pl_constant_emp: pl,
        sc_wrt_min_emp: sc,
        quasar_gamma: (quasar > 0.0).then(|| quasar.min(1.0)),
        neg_eig_bound: curv_min,
        curvature_sup: curv_max,
        sample_region: region.to_string(),
        n_samples,
        n_excluded: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{make_diagonal_quadratic, make_squared_distance, PlanarCurve};

    #[test]
    fn half_square_is_exact() {
        let f = make_diagonal_quadratic(&[1.0]).unwrap();
        let r = diagnose(&f, &Region::cube(1, -2.0, 2.0), 1000, 0).unwrap();
        assert!((r.pl_constant_emp - 1.0).abs() < 1e-12);
        assert!((r.sc_wrt_min_emp - 1.0).abs() < 1e-12);
        assert_eq!(r.quasar_gamma, Some(1.0));
        assert!((r.neg_eig_bound - 1.0).abs() < 1e-6);
    }

    #[test]
    fn too_few_samples() {
        let f = make_diagonal_quadratic(&[1.0]).unwrap();
        assert!(matches!(
            diagnose(&f, &Region::cube(1, -1.0, 1.0), 999, 0),
            Err(GeometryError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn region_outside_validity() {
        let f = make_squared_distance(PlanarCurve::Circle { radius: 1.0 }, 2.0).unwrap();
        let err = diagnose(&f, &Region::cube(2, -3.0, 3.0), 1000, 0).unwrap_err();
        assert!(matches!(err, GeometryError::OutsideValidity { .. }));
    }

    #[test]
    fn degenerate_directions_are_excluded() {
        let f = make_diagonal_quadratic(&[0.0, 1.0]).unwrap();
        let region = Region::Box {
            lower: vec![-1.0, -1e-13],
            upper: vec![1.0, 1e-13],
        };
        assert!(diagnose(&f, &region, 1000, 0).is_err());
    }
}
