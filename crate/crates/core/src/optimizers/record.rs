use serde::{Deserialize, Serialize};

use super::OptimizerParams;
use crate::noise::NoiseModel;

/// State of a discrete scheme at step `n`.
///
/// `g` is the gradient estimate at `x_look` used to produce step `n + 1`;
/// it is `None` for the final state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteIterate {
    pub n: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub x_look: Vec<f64>,
    pub v: Vec<f64>,
    pub g: Option<Vec<f64>>,
    pub f: f64,
}

/// Sample of the heavy-ball flow. `energy = f + |v|^2 / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub f: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Path {
    Discrete(Vec<DiscreteIterate>),
    Flow(Vec<FlowSample>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub objective_id: String,
    pub seed: u64,
    pub params: OptimizerParams,
    pub noise: NoiseModel,
    pub path: Path,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        match &self.path {
            Path::Discrete(v) => v.len(),
            Path::Flow(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iterates(&self) -> Option<&[DiscreteIterate]> {
        match &self.path {
            Path::Discrete(v) => Some(v),
            Path::Flow(_) => None,
        }
    }

    pub fn samples(&self) -> Option<&[FlowSample]> {
        match &self.path {
            Path::Flow(v) => Some(v),
            Path::Discrete(_) => None,
        }
    }

    /// `(t, x, v, f)` for every recorded state, regardless of scheme.
    pub fn states(&self) -> Vec<(f64, &[f64], &[f64], f64)> {
        match &self.path {
            Path::Discrete(v) => v.iter().map(|s| (s.t, &s.x[..], &s.v[..], s.f)).collect(),
            Path::Flow(v) => v.iter().map(|s| (s.t, &s.x[..], &s.v[..], s.f)).collect(),
        }
    }

    pub fn final_x(&self) -> &[f64] {
        match &self.path {
            Path::Discrete(v) => &v.last().expect("non-empty trajectory").x,
            Path::Flow(v) => &v.last().expect("non-empty trajectory").x,
        }
    }

    pub fn final_f(&self) -> f64 {
        match &self.path {
            Path::Discrete(v) => v.last().map_or(f64::NAN, |s| s.f),
            Path::Flow(v) => v.last().map_or(f64::NAN, |s| s.f),
        }
    }

    /// `f` at discrete step `n`, if recorded.
    pub fn f_at(&self, n: usize) -> Option<f64> {
        let it = self.iterates()?;
        it.binary_search_by_key(&n, |s| s.n).ok().map(|i| it[i].f)
    }
}
