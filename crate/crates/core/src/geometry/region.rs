use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::GeometryError;
use crate::linalg;
use crate::objectives::ObjectiveSpec;

/// Where diagnostics draw their sample points.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Axis-aligned box.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `r_min <= |x - center| <= r_max`, with log-uniform stratified radii
    /// (so oscillations in `log |x|` are swept evenly). In one dimension the
    /// sign alternates between samples.
    LogShell {
        center: Vec<f64>,
        r_min: f64,
        r_max: f64,
    },
    /// Points of a box with `f - inf f < alpha`, by rejection.
    Sublevel {
        alpha: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Box { lower, upper } => write!(f, "box lower={lower:?} upper={upper:?}"),
            Region::LogShell {
                center,
                r_min,
                r_max,
            } => write!(
                f,
                "log-shell center={center:?} radii=[{r_min:e}, {r_max:e}]"
            ),
            Region::Sublevel {
                alpha,
                lower,
                upper,
            } => write!(
                f,
                "sublevel f-inf<{alpha} in box lower={lower:?} upper={upper:?}"
            ),
        }
    }
}

fn numbers(s: &str) -> Result<Vec<f64>, GeometryError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| GeometryError::Region(format!("`{t}` is not a number")))
        })
        .collect()
}

/// `[lo, hi]` repeated `dim` times, or explicit per-coordinate pairs.
fn bounds(v: &[f64], dim: usize) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let (lower, upper): (Vec<f64>, Vec<f64>) = match v.len() {
        2 => (vec![v[0]; dim], vec![v[1]; dim]),
        n if n == 2 * dim => (
            v.iter().step_by(2).copied().collect(),
            v.iter().skip(1).step_by(2).copied().collect(),
        ),
        n => {
            return Err(GeometryError::Region(format!(
                "expected 2 or {} bounds, got {n}",
                2 * dim
            )))
        }
    };
    if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
        return Err(GeometryError::Region("empty box".into()));
    }
    Ok((lower, upper))
}

impl Region {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Region::Box {
            lower: vec![lo; dim],
            upper: vec![hi; dim],
        }
    }

    /// Parse `box:lo,hi[,lo2,hi2...]`, `shell:r_min,r_max[@c1,c2,...]`,
    /// `sublevel:alpha[@lo,hi...]` or `default`.
    pub fn parse(spec: &str, objective: &ObjectiveSpec) -> Result<Self, GeometryError> {
        let dim = objective.dim();
        let spec = spec.trim();
        if spec == "default" {
            return Ok(Region::default_for(objective));
        }
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| GeometryError::Region(format!("cannot parse region `{spec}`")))?;
        let (main, at) = match rest.split_once('@') {
            Some((m, a)) => (m, Some(a)),
            None => (rest, None),
        };
        let v = numbers(main)?;
        let region = match kind {
            "box" => {
                let (lower, upper) = bounds(&v, dim)?;
                Region::Box { lower, upper }
            }
            "shell" => {
                if v.len() != 2 || !(v[0] > 0.0 && v[0] < v[1]) {
                    return Err(GeometryError::Region(
                        "shell needs 0 < r_min < r_max".into(),
                    ));
                }
                let center = match at {
                    Some(c) => numbers(c)?,
                    None => vec![0.0; dim],
                };
                if center.len() != dim {
                    return Err(GeometryError::Region("centre has wrong dimension".into()));
                }
                Region::LogShell {
                    center,
                    r_min: v[0],
                    r_max: v[1],
                }
            }
            "sublevel" => {
                if v.len() != 1 || !(v[0] > 0.0) {
                    return Err(GeometryError::Region("sublevel needs alpha > 0".into()));
                }
                let (lower, upper) = match at {
                    Some(b) => bounds(&numbers(b)?, dim)?,
                    None => (vec![-3.0; dim], vec![3.0; dim]),
                };
                Region::Sublevel {
                    alpha: v[0],
                    lower,
                    upper,
                }
            }
            _ => {
                return Err(GeometryError::Region(format!(
                    "unknown region kind `{kind}`"
                )))
            }
        };
        Ok(region)
    }

    /// A region matched to each shipped objective family.
    pub fn default_for(objective: &ObjectiveSpec) -> Self {
        let dim = objective.dim();
        let id = objective.id();
        if let Some(args) = id.strip_prefix("oscillatory1d{") {
            let r = args
                .trim_end_matches('}')
                .split(',')
                .nth(1)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .unwrap_or(1.0);
            return Region::LogShell {
                center: vec![0.0],
                r_min: (-std::f64::consts::PI / r).exp() * 1e-3,
                r_max: 10.0,
            };
        }
        match &objective.projection {
            Some(p) if p.sublevel_alpha.is_finite() => Region::Sublevel {
                alpha: p.sublevel_alpha,
                lower: vec![-2.0; dim],
                upper: vec![2.0; dim],
            },
            _ => Region::cube(dim, -2.0, 2.0),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Region::Box { lower, .. } | Region::Sublevel { lower, .. } => lower.len(),
            Region::LogShell { center, .. } => center.len(),
        }
    }

    /// `n` deterministic samples.
    pub fn sample(
        &self,
        objective: &ObjectiveSpec,
        n: usize,
        seed: u64,
    ) -> Result<Vec<Vec<f64>>, GeometryError> {
        if self.dim() != objective.dim() {
            return Err(GeometryError::Region(format!(
                "region has dimension {}, objective {}",
                self.dim(),
                objective.dim()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let uniform_box = |rng: &mut ChaCha8Rng, lower: &[f64], upper: &[f64]| -> Vec<f64> {
            lower
                .iter()
                .zip(upper)
                .map(|(l, u)| rng.random_range(*l..*u))
                .collect()
        };
        match self {
            Region::Box { lower, upper } => Ok((0..n)
                .map(|_| uniform_box(&mut rng, lower, upper))
                .collect()),
            Region::LogShell {
                center,
                r_min,
                r_max,
            } => {
                let (a, b) = (r_min.ln(), r_max.ln());
                let d = center.len();
                Ok((0..n)
                    .map(|i| {
                        let u: f64 = rng.random();
                        let r = (a + (i as f64 + u) / n as f64 * (b - a)).exp();
                        let dir = if d == 1 {
                            vec![if i % 2 == 0 { 1.0 } else { -1.0 }]
                        } else {
                            loop {
                                let g: Vec<f64> =
                                    (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                                if let Some(u) = linalg::normalized(&g) {
                                    break u;
                                }
                            }
                        };
                        linalg::axpy(center, r, &dir)
                    })
                    .collect())
            }
            Region::Sublevel {
                alpha,
                lower,
                upper,
            } => {
                let inf = objective.inf_value.unwrap_or(0.0);
                let mut out = Vec::with_capacity(n);
                let max_tries = 1000 * n.max(1);
                for _ in 0..max_tries {
                    if out.len() == n {
                        break;
                    }
                    let x = uniform_box(&mut rng, lower, upper);
                    if let Ok(f) = objective.value(&x) {
                        if f - inf < *alpha {
                            out.push(x);
                        }
                    }
                }
                if out.len() < n {
                    return Err(GeometryError::Region(format!(
                        "sublevel set too thin: found {} of {n} points",
                        out.len()
                    )));
                }
                Ok(out)
            }
        }
    }
}
