use nalgebra::{DMatrix, DVector};

use super::{
    within, EndpointCheck, LyapunovError, LyapunovTrace, Theorem, DETERMINISTIC_SLACK, Z_SLACK,
};
use crate::noise::NoiseModel;
use crate::objectives::ObjectiveSpec;
use crate::optimizers::{DiscreteIterate, OptimizerParams, Scheme, TrajectoryRecord};
use crate::stats::{compensated_sum, MeanEstimate};

/// Fewest runs accepted for stochastic certificates.
pub const MIN_ENSEMBLE: usize = 1000;

/// `(1 + sqrt(mu eta))^2 / (1 - sqrt(mu eta))`, the weight of `|Pi v|^2`.
pub fn nag_lyapunov_coefficient(mu: f64, eta: f64) -> f64 {
    let s = (mu * eta).sqrt();
    (1.0 + s).powi(2) / (1.0 - s)
}

fn projector(objective: &ObjectiveSpec, theorem: Theorem) -> Result<&DMatrix<f64>, LyapunovError> {
    objective
        .projection
        .as_ref()
        .and_then(|p| p.linear_projector())
        .ok_or(LyapunovError::NonAffine(theorem))
}

/// `f - inf f + |b Pi^perp v + sqrt(mu) (x' - pi(x'))|^2 / 2 + lambda/2 |Pi v|^2`
fn discrete_value(
    objective: &ObjectiveSpec,
    pi: &DMatrix<f64>,
    it: &DiscreteIterate,
    mu: f64,
    b: f64,
    lambda: f64,
) -> Result<f64, LyapunovError> {
    let v = DVector::from_column_slice(&it.v);
    let pv = pi * &v;
    let perp_v = &v - &pv;
    let look = DVector::from_column_slice(&it.x_look);
    let proj = DVector::from_column_slice(&objective.project(&it.x_look)?);
    let w = b * perp_v + mu.sqrt() * (look - proj);
    let pv2 = pv.norm_squared();
    // lambda is infinite at mu eta = 1, where rho = 0 forces Pi v = 0.
    let tangential = if pv2 == 0.0 { 0.0 } else { 0.5 * lambda * pv2 };
    Ok(it.f - objective.inf_value.unwrap_or(0.0) + 0.5 * w.norm_squared() + tangential)
}

fn iterates(record: &TrajectoryRecord) -> Result<&[DiscreteIterate], LyapunovError> {
    record.iterates().ok_or(LyapunovError::WrongPath {
        expected: "discrete",
    })
}

/// Certificate for exact Nesterov iterates on an affine minimizer set:
/// `L_{n+1} <= (1 - sqrt(mu eta)) L_n` and
/// `f(x_n) - inf f <= (1 - sqrt(mu eta))^n (f(x_0) - inf f + mu/2 |x_0 - pi(x_0)|^2)`.
pub fn discrete_lyapunov_nag(
    objective: &ObjectiveSpec,
    record: &TrajectoryRecord,
    params: &OptimizerParams,
) -> Result<LyapunovTrace, LyapunovError> {
    let pi = projector(objective, Theorem::Discrete)?;
    if !record.noise.is_exact() {
        return Err(LyapunovError::NoisyRecord(Theorem::Discrete));
    }
    let its = iterates(record)?;
    let (mu, eta) = (params.mu, params.eta);
    let lambda = nag_lyapunov_coefficient(mu, eta);
    let q = 1.0 - (mu * eta).sqrt();
    let inf = objective.inf_value.unwrap_or(0.0);
    let l0 = objective.lyapunov_seed(&its[0].x, mu)?;

    let mut trace = LyapunovTrace::new(Theorem::Discrete, 0.0);
    let mut prev: Option<(usize, f64)> = None;
    let last = its.len() - 1;
    for (k, it) in its.iter().enumerate() {
        let value = discrete_value(objective, pi, it, mu, 1.0, lambda)?;
        let (target, ok) = match prev {
            None => (f64::NAN, true),
            Some((n_prev, v_prev)) => {
                let qk = q.powi((it.n - n_prev) as i32);
                (qk, value <= qk * v_prev + DETERMINISTIC_SLACK * v_prev)
            }
        };
        trace.push(it.n, it.t, value, target, DETERMINISTIC_SLACK, ok);
        prev = Some((it.n, value));

        let bound = q.powi(it.n as i32) * l0;
        let pass = within(it.f - inf, bound, DETERMINISTIC_SLACK);
        if !pass || k == last {
            trace.endpoint.push(EndpointCheck {
                n: it.n,
                t: it.t,
                measured: it.f - inf,
                bound,
                slack: DETERMINISTIC_SLACK * bound,
                pass,
            });
        }
    }
    Ok(trace)
}

/// Lyapunov values of one discrete record under the functional of its scheme.
pub(crate) fn record_values(
    objective: &ObjectiveSpec,
    record: &TrajectoryRecord,
) -> Result<Vec<f64>, LyapunovError> {
    let params = &record.params;
    let (theorem, b, lambda_at): (Theorem, f64, Box<dyn Fn(usize) -> f64>) = match params.scheme {
        Scheme::Nag => {
            let l = nag_lyapunov_coefficient(params.mu, params.eta);
            (Theorem::Discrete, 1.0, Box::new(move |_| l))
        }
        Scheme::Agnes => {
            let c = params.agnes_constants();
            (Theorem::Agnes, c.b, Box::new(move |_| c.lambda))
        }
        Scheme::NagDecreasing => {
            let p = *params;
            (
                Theorem::Decreasing,
                1.0,
                Box::new(move |n: usize| {
                    nag_lyapunov_coefficient(p.mu, p.step_constants(n.saturating_sub(1)).0)
                }),
            )
        }
        Scheme::Gd | Scheme::HeavyBallFlow => {
            return Err(LyapunovError::WrongPath {
                expected: "momentum",
            })
        }
    };
    let pi = projector(objective, theorem)?;
    iterates(record)?
        .iter()
        .map(|it| discrete_value(objective, pi, it, params.mu, b, lambda_at(it.n)))
        .collect()
}

/// Per-run Lyapunov values `[run][entry]` plus the shared step list.
fn ensemble_values(
    records: &[TrajectoryRecord],
    mut value: impl FnMut(&DiscreteIterate) -> Result<f64, LyapunovError>,
) -> Result<(Vec<Vec<f64>>, Vec<usize>), LyapunovError> {
    let first = iterates(&records[0])?;
    let steps: Vec<usize> = first.iter().map(|s| s.n).collect();
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let its = iterates(r)?;
        if its.len() != steps.len() || its.iter().zip(&steps).any(|(s, &n)| s.n != n) {
            return Err(LyapunovError::MisalignedEnsemble);
        }
        out.push(its.iter().map(&mut value).collect::<Result<Vec<_>, _>>()?);
    }
    Ok((out, steps))
}

fn check_ensemble_size(
    records: &[TrajectoryRecord],
    noise: &NoiseModel,
) -> Result<(), LyapunovError> {
    let min = if noise.is_exact() { 1 } else { MIN_ENSEMBLE };
    if records.len() < min {
        return Err(LyapunovError::EnsembleTooSmall {
            got: records.len(),
            min,
        });
    }
    Ok(())
}

/// Expectation step check: per-run differences
/// `V_k - q V_{k-1} - c` must have mean at most `Z_SLACK` standard errors.
fn ensemble_step(values: &[Vec<f64>], k: usize, q: f64, c: f64) -> (f64, bool) {
    let diffs: Vec<f64> = values.iter().map(|v| v[k] - q * v[k - 1] - c).collect();
    let est = MeanEstimate::from_slice(&diffs);
    let scale = compensated_sum(values.iter().map(|v| v[k - 1].abs())) / values.len() as f64;
    let mean_now = compensated_sum(values.iter().map(|v| v[k])) / values.len() as f64;
    (
        mean_now,
        est.mean <= Z_SLACK * est.std_error + DETERMINISTIC_SLACK * scale,
    )
}

fn ensemble_mean(values: &[Vec<f64>], k: usize) -> f64 {
    compensated_sum(values.iter().map(|v| v[k])) / values.len() as f64
}

/// Endpoint checks `E[f(x_n) - inf f] <= bound(n)` within `Z_SLACK` standard errors.
fn ensemble_endpoints(
    trace: &mut LyapunovTrace,
    records: &[TrajectoryRecord],
    inf: f64,
    bound: impl Fn(usize) -> f64,
) -> Result<(), LyapunovError> {
    let first = iterates(&records[0])?;
    let last = first.len() - 1;
    for (k, it) in first.iter().enumerate() {
        let gaps: Vec<f64> = records
            .iter()
            .map(|r| iterates(r).map(|s| s[k].f - inf))
            .collect::<Result<_, _>>()?;
        let est = MeanEstimate::from_slice(&gaps);
        let b = bound(it.n);
        let slack = Z_SLACK * est.std_error + DETERMINISTIC_SLACK * b.abs();
        let pass = est.mean <= b + slack;
        if !pass || k == last {
            trace.endpoint.push(EndpointCheck {
                n: it.n,
                t: it.t,
                measured: est.mean,
                bound: b,
                slack,
                pass,
            });
        }
    }
    Ok(())
}

/// Expectation certificate for AGNES (and Nesterov with additive noise,
/// the case `sigma_m = 0`).
///
/// Checks `L_{n+1} <= q L_n + c` with `q = 1 - sqrt(mu eta / (1 + sigma_m^2))`,
/// `c = (L eta^2 (1 + sigma_m^2) + eta) / (2 (1 + sigma_m^2)) sigma_a^2`, and the
/// endpoint bound `q^n E[L_0] + sigma_a^2 sqrt(eta) / sqrt(mu (1 + sigma_m^2))`.
pub fn discrete_lyapunov_agnes(
    objective: &ObjectiveSpec,
    records: &[TrajectoryRecord],
    params: &OptimizerParams,
    noise: &NoiseModel,
) -> Result<LyapunovTrace, LyapunovError> {
    let theorem = if params.scheme == Scheme::Agnes {
        Theorem::Agnes
    } else {
        Theorem::Additive
    };
    let pi = projector(objective, theorem)?;
    check_ensemble_size(records, noise)?;
    let l = params
        .smoothness
        .or(objective.smoothness_l)
        .ok_or(LyapunovError::MissingConstant("smoothness L"))?;
    let (mu, eta) = (params.mu, params.eta);
    let s2 = params.sigma_m * params.sigma_m;
    let sigma_a2 = if noise.is_exact() {
        0.0
    } else {
        noise.sigma_a * noise.sigma_a
    };
    let (b, lambda) = if params.scheme == Scheme::Agnes {
        let c = params.agnes_constants();
        (c.b, c.lambda)
    } else {
        (1.0, nag_lyapunov_coefficient(mu, eta))
    };
    let q = 1.0 - (mu * eta / (1.0 + s2)).sqrt();
    let c = (l * eta * eta * (1.0 + s2) + eta) / (2.0 * (1.0 + s2)) * sigma_a2;
    let floor = sigma_a2 * eta.sqrt() / (mu * (1.0 + s2)).sqrt();

    let (values, steps) = ensemble_values(records, |it| {
        discrete_value(objective, pi, it, mu, b, lambda)
    })?;
    let mut trace = LyapunovTrace::new(theorem, floor);
    let first = iterates(&records[0])?;
    for k in 0..steps.len() {
        if k == 0 {
            trace.push(
                steps[0],
                first[0].t,
                ensemble_mean(&values, 0),
                f64::NAN,
                0.0,
                true,
            );
            continue;
        }
        let gap = (steps[k] - steps[k - 1]) as i32;
        let qk = q.powi(gap);
        // c (1 + q + ... + q^{gap-1})
        let ck = if q < 1.0 {
            c * (1.0 - qk) / (1.0 - q)
        } else {
            c * gap as f64
        };
        let (mean, ok) = ensemble_step(&values, k, qk, ck);
        trace.push(steps[k], first[k].t, mean, qk, ck, ok);
    }

    let inf = objective.inf_value.unwrap_or(0.0);
    let l0s: Vec<f64> = records
        .iter()
        .map(|r| {
            objective
                .lyapunov_seed(&iterates(r)?[0].x, mu)
                .map_err(LyapunovError::from)
        })
        .collect::<Result<_, _>>()?;
    let l0 = compensated_sum(l0s.iter().copied()) / l0s.len() as f64;
    ensemble_endpoints(&mut trace, records, inf, |n| q.powi(n as i32) * l0 + floor)?;
    Ok(trace)
}

/// Expectation certificate for Nesterov with the decreasing schedule.
///
/// Uses `lambda_n = (1 + sqrt(mu eta_{n-1}))^2 / (1 - sqrt(mu eta_{n-1}))`,
/// checks `L_{n+1} <= (1 - sqrt(mu eta_n)) L_n + sigma_a^2 eta_n`, and the
/// endpoint bound
/// `(n0 E[L_0] + sigma_a^2/mu log(1 + n/n0)) / (n + n0)` with `n0 = sqrt(L/mu)`.
pub fn discrete_lyapunov_decreasing(
    objective: &ObjectiveSpec,
    records: &[TrajectoryRecord],
    params: &OptimizerParams,
    noise: &NoiseModel,
) -> Result<LyapunovTrace, LyapunovError> {
    let theorem = Theorem::Decreasing;
    let pi = projector(objective, theorem)?;
    check_ensemble_size(records, noise)?;
    let l = params
        .smoothness
        .or(objective.smoothness_l)
        .ok_or(LyapunovError::MissingConstant("smoothness L"))?;
    let mu = params.mu;
    let sigma_a2 = if noise.is_exact() {
        0.0
    } else {
        noise.sigma_a * noise.sigma_a
    };
    let eta_at = |n: usize| params.step_constants(n).0;
    let lambda_at = |n: usize| nag_lyapunov_coefficient(mu, eta_at(n.saturating_sub(1)));

    let (values, steps) = ensemble_values(records, |it| {
        discrete_value(objective, pi, it, mu, 1.0, lambda_at(it.n))
    })?;
    let mut trace = LyapunovTrace::new(theorem, 0.0);
    let first = iterates(&records[0])?;
    for k in 0..steps.len() {
        if k == 0 {
            trace.push(
                steps[0],
                first[0].t,
                ensemble_mean(&values, 0),
                f64::NAN,
                0.0,
                true,
            );
            continue;
        }
        // Compose the one-step bounds from steps[k-1] to steps[k].
        let (mut qk, mut ck) = (1.0, 0.0);
        for n in steps[k - 1]..steps[k] {
            let eta = eta_at(n);
            let q = 1.0 - (mu * eta).sqrt();
            qk *= q;
            ck = q * ck + sigma_a2 * eta;
        }
        let (mean, ok) = ensemble_step(&values, k, qk, ck);
        trace.push(steps[k], first[k].t, mean, qk, ck, ok);
    }

    let inf = objective.inf_value.unwrap_or(0.0);
    let n0 = (l / mu).sqrt();
    let l0s: Vec<f64> = records
        .iter()
        .map(|r| {
            objective
                .lyapunov_seed(&iterates(r)?[0].x, mu)
                .map_err(LyapunovError::from)
        })
        .collect::<Result<_, _>>()?;
    let l0 = compensated_sum(l0s.iter().copied()) / l0s.len() as f64;
    ensemble_endpoints(&mut trace, records, inf, |n| {
        let n = n as f64;
        (n0 * l0 + sigma_a2 / mu * (1.0 + n / n0).ln()) / (n + n0)
    })?;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{make_diagonal_quadratic, make_squared_distance, PlanarCurve};
    use crate::optimizers::run_discrete;

    #[test]
    fn coefficient_tends_to_one() {
        for eta in [1e-2, 1e-4, 1e-6] {
            let c = nag_lyapunov_coefficient(1.0, eta);
            assert!((c - 1.0).abs() < 4.0 * eta.sqrt());
        }
    }

    #[test]
    fn stationary_on_minimizer_set() {
        let f = make_diagonal_quadratic(&[0.0, 1.0]).unwrap();
        let p = OptimizerParams::nag(1.0, 0.25).unwrap().with_steps(20);
        let rec = run_discrete(&f, &NoiseModel::zero(), &p, &[2.0, 0.0], None).unwrap();
        let trace = discrete_lyapunov_nag(&f, &rec, &p).unwrap();
        assert!(trace.values.iter().all(|&v| v == 0.0));
        assert!(rec
            .iterates()
            .unwrap()
            .iter()
            .all(|s| s.x == vec![2.0, 0.0]));
        trace.ensure().unwrap();
    }

    #[test]
    fn full_contraction_when_mu_eta_is_one() {
        let f = make_diagonal_quadratic(&[0.0, 1.0]).unwrap();
        let p = OptimizerParams::nag(1.0, 1.0).unwrap().with_steps(1);
        let rec = run_discrete(&f, &NoiseModel::zero(), &p, &[1.0, 1.0], None).unwrap();
        let trace = discrete_lyapunov_nag(&f, &rec, &p).unwrap();
        assert!(trace.values[1] <= 1e-12);
    }

    #[test]
    fn half_contraction_for_quarter_step() {
        let f = make_diagonal_quadratic(&[0.0, 1.0]).unwrap();
        let p = OptimizerParams::nag(1.0, 0.25).unwrap().with_steps(100);
        let rec = run_discrete(&f, &NoiseModel::zero(), &p, &[1.0, 1.0], None).unwrap();
        let trace = discrete_lyapunov_nag(&f, &rec, &p).unwrap();
        trace.ensure().unwrap();
        assert!(trace.max_ratio() <= 0.5 * (1.0 + 1e-12));
    }

    #[test]
    fn non_affine_is_refused() {
        let f = make_squared_distance(PlanarCurve::Circle { radius: 1.0 }, 1.0).unwrap();
        let p = OptimizerParams::nag(1.0, 0.5).unwrap().with_steps(3);
        let rec = run_discrete(&f, &NoiseModel::zero(), &p, &[1.2, 0.0], None).unwrap();
        assert_eq!(
            discrete_lyapunov_nag(&f, &rec, &p).unwrap_err(),
            LyapunovError::NonAffine(Theorem::Discrete)
        );
    }

    #[test]
    fn noiseless_agnes_matches_nag_values() {
        let f = make_diagonal_quadratic(&[0.0, 0.01, 1.0]).unwrap();
        let pn = OptimizerParams::nag(0.01, 0.5).unwrap().with_steps(50);
        let pa = OptimizerParams::agnes(0.01, 0.5, 0.0, Some(1.0))
            .unwrap()
            .with_steps(50);
        let x0 = [1.0, 1.0, 1.0];
        let rn = run_discrete(&f, &NoiseModel::zero(), &pn, &x0, None).unwrap();
        let ra = run_discrete(&f, &NoiseModel::zero(), &pa, &x0, None).unwrap();
        let tn = discrete_lyapunov_nag(&f, &rn, &pn).unwrap();
        let ta = discrete_lyapunov_agnes(&f, &[ra], &pa, &NoiseModel::zero()).unwrap();
        assert_eq!(tn.values, ta.values);
        ta.ensure().unwrap();
    }

    #[test]
    fn noisy_ensemble_must_be_large() {
        let f = make_diagonal_quadratic(&[0.0, 1.0]).unwrap();
        let p = OptimizerParams::nag(1.0, 0.5).unwrap().with_steps(3);
        let noise = NoiseModel::gaussian(1.0, 0.0, 0).unwrap();
        let rec = run_discrete(&f, &noise, &p, &[1.0, 1.0], None).unwrap();
        assert!(matches!(
            discrete_lyapunov_agnes(&f, &[rec], &p, &noise),
            Err(LyapunovError::EnsembleTooSmall { .. })
        ));
    }
}
