//! Seeded stochastic gradient estimators.
//!
//! The Gaussian prototype returns `(1 + sigma_m N1) grad f(x) + sigma_a N2`,
//! with `N1` a scalar standard normal and `N2` a standard normal vector
//! scaled by `1/sqrt(d)` so that `E|g - grad f|^2 = sigma_a^2 + sigma_m^2 |grad f|^2`
//! holds with equality. Every draw is keyed by `(seed, draw_index)` through a
//! counter-based ChaCha stream, so draw `n` does not depend on how many draws
//! were taken before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::objectives::{ObjectiveError, ObjectiveSpec};
use crate::stats::MeanEstimate;

/// Fewest draws accepted by [`verify_stochastic_identities`].
pub const MIN_IDENTITY_DRAWS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("invalid noise parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("need at least {min} draws, got {got}")]
    InsufficientDraws { got: usize, min: usize },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseKind {
    #[serde(rename = "gaussian")]
    GaussianPrototype,
    #[serde(rename = "zero")]
    ZeroNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma_a: f64,
    pub sigma_m: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn zero() -> Self {
        Self {
            kind: NoiseKind::ZeroNoise,
            sigma_a: 0.0,
            sigma_m: 0.0,
            seed: 0,
        }
    }

    pub fn gaussian(sigma_a: f64, sigma_m: f64, seed: u64) -> Result<Self, NoiseError> {
        for (name, v) in [("sigma_a", sigma_a), ("sigma_m", sigma_m)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(NoiseError::InvalidParameter {
                    name,
                    reason: format!("{v} must be finite and non-negative"),
                });
            }
        }
        Ok(Self {
            kind: NoiseKind::GaussianPrototype,
            sigma_a,
            sigma_m,
            seed,
        })
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn is_exact(&self) -> bool {
        self.kind == NoiseKind::ZeroNoise || (self.sigma_a == 0.0 && self.sigma_m == 0.0)
    }

    /// `(N1, N2)` for this draw; `N2` has `E|N2|^2 = 1`.
    pub fn draw(&self, dim: usize, draw_index: u64) -> (f64, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(draw_index);
        let n1: f64 = StandardNormal.sample(&mut rng);
        let s = 1.0 / (dim as f64).sqrt();
        let n2 = (0..dim)
            .map(|_| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        (n1, n2)
    }

    /// Stochastic estimate of `grad f(x)` for draw `draw_index`.
    pub fn estimate(
        &self,
        objective: &ObjectiveSpec,
        x: &[f64],
        draw_index: u64,
    ) -> Result<Vec<f64>, ObjectiveError> {
        let g = objective.gradient(x)?;
        if self.is_exact() {
            return Ok(g);
        }
        Ok(self.perturb(&g, draw_index))
    }

    fn perturb(&self, g: &[f64], draw_index: u64) -> Vec<f64> {
        let (n1, n2) = self.draw(g.len(), draw_index);
        let m = 1.0 + self.sigma_m * n1;
        g.iter()
            .zip(&n2)
            .map(|(gi, ni)| m * gi + self.sigma_a * ni)
            .collect()
    }

    /// `sigma_a^2 + sigma_m^2 |grad|^2`.
    pub fn variance_bound(&self, grad_norm_sq: f64) -> f64 {
        if self.kind == NoiseKind::ZeroNoise {
            return 0.0;
        }
        self.sigma_a * self.sigma_a + self.sigma_m * self.sigma_m * grad_norm_sq
    }
}

pub fn estimate_gradient(
    objective: &ObjectiveSpec,
    model: &NoiseModel,
    x: &[f64],
    draw_index: u64,
) -> Result<Vec<f64>, ObjectiveError> {
    model.estimate(objective, x, draw_index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub z_score: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.z_score.abs() <= 4.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub n_draws: usize,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(IdentityCheck::passed)
    }
}

/// Empirical check of the four identities relating `g` and `grad f` at a
/// fixed point `x` and velocity `v`:
/// `E<g, grad f> = |grad f|^2`, `E<g, v> = <grad f, v>`,
/// `E<g, w> = <grad f, w>` with `w = x - pi(x)` (or `x` without a projection),
/// and `E|g|^2 = |grad f|^2 + E|g - grad f|^2`.
///
/// z-scores are formed from per-draw differences of the two sides.
pub fn verify_stochastic_identities(
    objective: &ObjectiveSpec,
    model: &NoiseModel,
    x: &[f64],
    v: &[f64],
    n_draws: usize,
) -> Result<IdentityReport, NoiseError> {
    if n_draws < MIN_IDENTITY_DRAWS {
        return Err(NoiseError::InsufficientDraws {
            got: n_draws,
            min: MIN_IDENTITY_DRAWS,
        });
    }
    if v.len() != x.len() {
        return Err(ObjectiveError::DimensionMismatch {
            expected: x.len(),
            got: v.len(),
        }
        .into());
    }
    let grad = objective.gradient(x)?;
    let w = match objective.projection {
        Some(_) => linalg::sub(x, &objective.project(x)?),
        None => x.to_vec(),
    };
    let grad_sq = linalg::norm_sq(&grad);
    let grad_v = linalg::dot(&grad, v);
    let grad_w = linalg::dot(&grad, &w);

    let mut samples: [Vec<f64>; 4] = Default::default();
    let mut lhs_samples: [Vec<f64>; 4] = Default::default();
    for n in 0..n_draws {
        let g = if model.is_exact() {
            grad.clone()
        } else {
            model.perturb(&grad, n as u64)
        };
        let err = linalg::sub(&g, &grad);
        let err_sq = linalg::norm_sq(&err);
        let lhs = [
            linalg::dot(&g, &grad),
            linalg::dot(&g, v),
            linalg::dot(&g, &w),
            linalg::norm_sq(&g),
        ];
        let rhs = [grad_sq, grad_v, grad_w, grad_sq + err_sq];
        for k in 0..4 {
            lhs_samples[k].push(lhs[k]);
            samples[k].push(lhs[k] - rhs[k]);
        }
    }
    let names = [
        "<g,grad f> = |grad f|^2",
        "<g,v> = <grad f,v>",
        "<g,x-pi(x)> = <grad f,x-pi(x)>",
        "|g|^2 = |grad f|^2 + |g-grad f|^2",
    ];
    let scale = 1.0 + grad_sq + linalg::norm_sq(v) + linalg::norm_sq(&w);
    let checks = (0..4)
        .map(|k| {
            let diff = MeanEstimate::from_slice(&samples[k]);
            let lhs = MeanEstimate::from_slice(&lhs_samples[k]).mean;
            IdentityCheck {
                name: names[k],
                lhs,
                rhs: lhs - diff.mean,
                z_score: diff.z_score(1e-12 * scale),
            }
        })
        .collect();
    Ok(IdentityReport { n_draws, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::make_diagonal_quadratic;

    #[test]
    fn zero_noise_is_exact() {
        let f = make_diagonal_quadratic(&[1.0, 2.0]).unwrap();
        let g = NoiseModel::zero().estimate(&f, &[1.0, 1.0], 7).unwrap();
        assert_eq!(g, vec![1.0, 2.0]);
    }

    #[test]
    fn draws_are_keyed_by_index() {
        let m = NoiseModel::gaussian(1.0, 0.5, 42).unwrap();
        assert_eq!(m.draw(3, 5), m.draw(3, 5));
        assert_ne!(m.draw(3, 5), m.draw(3, 6));
        assert_ne!(m.draw(3, 5), m.with_seed(43).draw(3, 5));
    }

    #[test]
    fn rejects_negative_sigma() {
        assert!(NoiseModel::gaussian(-1.0, 0.0, 0).is_err());
        assert!(NoiseModel::gaussian(0.0, f64::NAN, 0).is_err());
    }

    #[test]
    fn identities_need_enough_draws() {
        let f = make_diagonal_quadratic(&[0.0, 1.0]).unwrap();
        let m = NoiseModel::gaussian(1.0, 1.0, 1).unwrap();
        assert_eq!(
            verify_stochastic_identities(&f, &m, &[1.0, 0.0], &[0.0, 1.0], 10),
            Err(NoiseError::InsufficientDraws { got: 10, min: 1000 })
        );
    }

    #[test]
    fn zero_noise_identities_are_exact() {
        let f = make_diagonal_quadratic(&[0.0, 1.0]).unwrap();
        let r =
            verify_stochastic_identities(&f, &NoiseModel::zero(), &[1.0, 2.0], &[0.5, -1.0], 1000)
                .unwrap();
        assert!(r.passed());
        for c in &r.checks {
            assert_eq!(c.z_score, 0.0);
            assert_eq!(c.lhs, c.rhs);
        }
    }
}
