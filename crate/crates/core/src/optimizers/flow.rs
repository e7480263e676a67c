use super::discrete::{divergence_threshold, guard};
use super::{FlowSample, OptimizerError, OptimizerParams, Path, Scheme, TrajectoryRecord};
use crate::linalg;
use crate::noise::NoiseModel;
use crate::objectives::{ObjectiveError, ObjectiveSpec};

fn rhs(
    objective: &ObjectiveSpec,
    gamma: f64,
    x: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), ObjectiveError> {
    let g = objective.gradient(x)?;
    let a = v.iter().zip(&g).map(|(vi, gi)| -gamma * vi - gi).collect();
    Ok((v.to_vec(), a))
}

/// Integrate `x'' + gamma x' = -grad f(x)` with classical RK4 at fixed `dt`.
pub fn run_flow(
    objective: &ObjectiveSpec,
    params: &OptimizerParams,
    x0: &[f64],
    v0: Option<&[f64]>,
) -> Result<TrajectoryRecord, OptimizerError> {
    if params.scheme != Scheme::HeavyBallFlow {
        return Err(OptimizerError::WrongScheme {
            expected: "heavy-ball-flow",
            got: params.scheme,
        });
    }
    let dt = params.dt;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(OptimizerError::InvalidParameter {
            name: "dt",
            reason: format!("{dt} must be positive"),
        });
    }
    let d = objective.dim();
    if x0.len() != d || v0.is_some_and(|v| v.len() != d) {
        return Err(OptimizerError::InvalidParameter {
            name: "x0",
            reason: format!("initial state does not match dimension {d}"),
        });
    }
    let gamma = params.gamma;
    let steps = params.step_count();
    let every = params.record_every.max(1);
    let mut x = x0.to_vec();
    let mut v = v0.map_or_else(|| vec![0.0; d], <[f64]>::to_vec);
    let f0 = objective.value(&x)?;
    let threshold = divergence_threshold(f0);
    let mut out = Vec::with_capacity(steps / every + 2);

    for k in 0..=steps {
        let f = if k == 0 { f0 } else { objective.value(&x)? };
        guard(k, f, threshold)?;
        if k % every == 0 || k == steps {
            out.push(FlowSample {
                t: k as f64 * dt,
                x: x.clone(),
                v: v.clone(),
                f,
                energy: f + 0.5 * linalg::norm_sq(&v),
            });
        }
        if k == steps {
            break;
        }
        let (k1x, k1v) = rhs(objective, gamma, &x, &v)?;
        let (k2x, k2v) = rhs(
            objective,
            gamma,
            &linalg::axpy(&x, 0.5 * dt, &k1x),
            &linalg::axpy(&v, 0.5 * dt, &k1v),
        )?;
        let (k3x, k3v) = rhs(
            objective,
            gamma,
            &linalg::axpy(&x, 0.5 * dt, &k2x),
            &linalg::axpy(&v, 0.5 * dt, &k2v),
        )?;
        let (k4x, k4v) = rhs(
            objective,
            gamma,
            &linalg::axpy(&x, dt, &k3x),
            &linalg::axpy(&v, dt, &k3v),
        )?;
        let w = dt / 6.0;
        for i in 0..d {
            x[i] += w * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            v[i] += w * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }

    Ok(TrajectoryRecord {
        objective_id: objective.id().to_string(),
        seed: 0,
        params: *params,
        noise: NoiseModel::zero(),
        path: Path::Flow(out),
    })
}
