use super::{LyapunovError, DETERMINISTIC_SLACK};
use crate::linalg;
use crate::objectives::ObjectiveSpec;

/// `f(x - eta g) <= f(x) - eta <grad f(x), g> + L eta^2 / 2 |g|^2` up to a
/// relative slack of `1e-12`.
pub fn certify_descent_lemma(
    objective: &ObjectiveSpec,
    x: &[f64],
    g: &[f64],
    eta: f64,
) -> Result<bool, LyapunovError> {
    let l = objective
        .smoothness_l
        .ok_or(LyapunovError::MissingConstant("smoothness L"))?;
    let fx = objective.value(x)?;
    let grad = objective.gradient(x)?;
    let lhs = objective.value(&linalg::axpy(x, -eta, g))?;
    let rhs = fx - eta * linalg::dot(&grad, g) + 0.5 * l * eta * eta * linalg::norm_sq(g);
    let scale = fx
        .abs()
        .max(lhs.abs())
        .max(rhs.abs())
        .max(f64::MIN_POSITIVE);
    Ok(lhs <= rhs + DETERMINISTIC_SLACK * scale)
}

/// `a^n y_0 + b / (1 - a)`: the bound on any `y` with `y_{k+1} <= a y_k + b`.
pub fn recursion_bound(a: f64, b: f64, y0: f64, n: usize) -> f64 {
    a.powi(n as i32) * y0 + b / (1.0 - a)
}
