use rayon::prelude::*;

use super::{DiscreteIterate, OptimizerError, OptimizerParams, Path, Scheme, TrajectoryRecord};
use crate::linalg;
use crate::noise::NoiseModel;
use crate::objectives::ObjectiveSpec;

pub(crate) fn divergence_threshold(f0: f64) -> f64 {
    1e6 * (f0.abs() + 1.0)
}

pub(crate) fn guard(n: usize, f: f64, threshold: f64) -> Result<(), OptimizerError> {
    if f.is_finite() && f <= threshold {
        Ok(())
    } else {
        Err(OptimizerError::Divergence {
            step: n,
            value: f,
            threshold,
        })
    }
}

/// Run a discrete scheme from `(x0, v0)`; `v0` defaults to zero and is
/// ignored by gradient descent. Gradient draw `n` uses `draw_index = n`.
pub fn run_discrete(
    objective: &ObjectiveSpec,
    noise: &NoiseModel,
    params: &OptimizerParams,
    x0: &[f64],
    v0: Option<&[f64]>,
) -> Result<TrajectoryRecord, OptimizerError> {
    let scheme = params.scheme;
    if !scheme.is_discrete() {
        return Err(OptimizerError::WrongScheme {
            expected: "a discrete scheme",
            got: scheme,
        });
    }
    let d = objective.dim();
    if x0.len() != d {
        return Err(OptimizerError::InvalidParameter {
            name: "x0",
            reason: format!("length {} does not match dimension {d}", x0.len()),
        });
    }
    let mut v = match (scheme, v0) {
        (Scheme::Gd, _) | (_, None) => vec![0.0; d],
        (_, Some(v0)) if v0.len() == d => v0.to_vec(),
        (_, Some(v0)) => {
            return Err(OptimizerError::InvalidParameter {
                name: "v0",
                reason: format!("length {} does not match dimension {d}", v0.len()),
            })
        }
    };
    let steps = params.step_count();
    let every = params.record_every.max(1);
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let f0 = objective.value(&x)?;
    let threshold = divergence_threshold(f0);
    let mut out = Vec::with_capacity(steps / every + 2);
    let mut prev_eta = params.step_constants(0).0;

    let look_coeff = |n: usize, prev_eta: f64| -> f64 {
        match scheme {
            Scheme::Gd => 0.0,
            Scheme::NagDecreasing => prev_eta.sqrt(),
            _ => params.step_constants(n).2.sqrt(),
        }
    };

    for n in 0..=steps {
        let f = if n == 0 { f0 } else { objective.value(&x)? };
        guard(n, f, threshold)?;
        let x_look = if scheme == Scheme::Gd {
            x.clone()
        } else {
            linalg::axpy(&x, look_coeff(n, prev_eta), &v)
        };
        let keep = n % every == 0 || n == steps;
        if n == steps {
            out.push(DiscreteIterate {
                n,
                t,
                x,
                x_look,
                v,
                g: None,
                f,
            });
            break;
        }
        let (eta, rho, alpha) = params.step_constants(n);
        let g = noise.estimate(objective, &x_look, n as u64)?;
        let x_next = linalg::axpy(&x_look, -eta, &g);
        let v_next = if scheme == Scheme::Gd {
            v.clone()
        } else {
            linalg::scale(&linalg::axpy(&v, -alpha.sqrt(), &g), rho)
        };
        if keep {
            out.push(DiscreteIterate {
                n,
                t,
                x: std::mem::take(&mut x),
                x_look,
                v: std::mem::take(&mut v),
                g: Some(g),
                f,
            });
        }
        t += if scheme == Scheme::Gd {
            eta
        } else {
            eta.sqrt()
        };
        x = x_next;
        v = v_next;
        prev_eta = eta;
    }

    Ok(TrajectoryRecord {
        objective_id: objective.id().to_string(),
        seed: noise.seed,
        params: *params,
        noise: *noise,
        path: Path::Discrete(out),
    })
}

/// Independent runs, one per seed, in parallel. Output order follows `seeds`.
pub fn run_ensemble(
    objective: &ObjectiveSpec,
    noise: &NoiseModel,
    params: &OptimizerParams,
    x0: &[f64],
    seeds: &[u64],
) -> Result<Vec<TrajectoryRecord>, OptimizerError> {
    seeds
        .par_iter()
        .map(|&seed| run_discrete(objective, &noise.with_seed(seed), params, x0, None))
        .collect()
}
