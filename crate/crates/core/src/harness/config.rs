use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::geometry::{probe_negative_curvature, Region};
use crate::lyapunov::Theorem;
use crate::noise::{NoiseKind, NoiseModel};
use crate::objectives::{parse_objective_id, ObjectiveSpec};
use crate::optimizers::{Horizon, OptimizerError, OptimizerParams, ScheduleForm, Scheme};

/// What a config reproduces instead of a plain run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Target {
    Fig2,
    Fig4,
    Example1Table,
    Certify(Theorem),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Fig2 => f.write_str("fig2"),
            Target::Fig4 => f.write_str("fig4"),
            Target::Example1Table => f.write_str("example1-table"),
            Target::Certify(t) => write!(f, "certify-{t}"),
        }
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig2" => Ok(Target::Fig2),
            "fig4" => Ok(Target::Fig4),
            "example1-table" => Ok(Target::Example1Table),
            _ => s
                .strip_prefix("certify-")
                .and_then(|t| t.parse().ok())
                .map(Target::Certify)
                .ok_or_else(|| format!("unknown reproduction target `{s}`")),
        }
    }
}

impl TryFrom<String> for Target {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Target> for String {
    fn from(t: Target) -> Self {
        t.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRange {
    pub start: u64,
    pub count: usize,
}

/// Either an explicit list or `{ start, count }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range(SeedRange),
}

impl Seeds {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range(r) => (r.start..r.start + r.count as u64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptConfig {
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Multiplicative noise level AGNES is tuned for; defaults to `noise.sigma_m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_m: Option<f64>,
    /// Steps for discrete schemes, final time for the flow.
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    #[serde(default)]
    pub sigma_a: f64,
    #[serde(default)]
    pub sigma_m: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            kind: NoiseKind::ZeroNoise,
            sigma_a: 0.0,
            sigma_m: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default)]
    pub form: ScheduleForm,
}

/// Experiment description, read from TOML (dotted keys such as
/// `opt.eta = 0.25` or `[opt]` tables are equivalent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    /// Noise seeds, one run each; defaults to `[noise.seed]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Seeds>,
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reproduce: Option<Target>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certify: Vec<Theorem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt: Option<OptConfig>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
}

fn invalid(path: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

fn param_error(e: OptimizerError) -> HarnessError {
    match e {
        OptimizerError::InvalidParameter { name, reason } => {
            let path = match name {
                "L" => "objective".to_string(),
                "horizon" => "opt.horizon".to_string(),
                other => format!("opt.{other}"),
            };
            invalid(&path, reason)
        }
        OptimizerError::StepBound {
            bound,
            value,
            limit,
        } => invalid(
            "opt.eta",
            format!("{value} violates the step bound {bound} (limit {limit})"),
        ),
        other => invalid("opt", other.to_string()),
    }
}

/// A config checked against its objective and turned into runnable parts.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub objective: ObjectiveSpec,
    pub params: OptimizerParams,
    pub noise: NoiseModel,
    pub seeds: Vec<u64>,
    pub x0: Vec<f64>,
    pub v0: Option<Vec<f64>>,
    pub certify: Vec<Theorem>,
}

/// Samples used by the negative-curvature precondition check.
const PRECONDITION_SAMPLES: usize = 1000;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    /// Check every field against the objective; errors name the field path.
    pub fn validate(&self) -> Result<Experiment, HarnessError> {
        let id = self
            .objective
            .as_deref()
            .ok_or_else(|| invalid("objective", "missing"))?;
        let objective = parse_objective_id(id).map_err(|e| invalid("objective", e.to_string()))?;
        let opt = self.opt.as_ref().ok_or_else(|| invalid("opt", "missing"))?;
        let dim = objective.dim();
        if opt.x0.len() != dim {
            return Err(invalid(
                "opt.x0",
                format!("has length {}, objective dimension is {dim}", opt.x0.len()),
            ));
        }
        if let Some(v0) = &opt.v0 {
            if v0.len() != dim {
                return Err(invalid(
                    "opt.v0",
                    format!("has length {}, objective dimension is {dim}", v0.len()),
                ));
            }
        }

        let noise = match self.noise.kind {
            NoiseKind::ZeroNoise => {
                if self.noise.sigma_a != 0.0 || self.noise.sigma_m != 0.0 {
                    return Err(invalid(
                        "noise.kind",
                        "zero noise takes no sigma_a / sigma_m",
                    ));
                }
                NoiseModel::zero().with_seed(self.noise.seed)
            }
            NoiseKind::GaussianPrototype => {
                NoiseModel::gaussian(self.noise.sigma_a, self.noise.sigma_m, self.noise.seed)
                    .map_err(|e| invalid("noise", e.to_string()))?
            }
        };

        let l = objective.smoothness_l;
        let need =
            |v: Option<f64>, path: &str| v.ok_or_else(|| invalid(path, "required for this scheme"));
        let mu_or_declared = opt.mu.or(objective.sc_mu);
        let steps = || -> Result<usize, HarnessError> {
            let h = opt.horizon;
            if h >= 0.0 && h.fract() == 0.0 && h <= 1e9 {
                Ok(h as usize)
            } else {
                Err(invalid("opt.horizon", format!("{h} is not a step count")))
            }
        };
        let eta_gate = |eta: f64| -> Result<(), HarnessError> {
            match l {
                Some(l) if eta > 1.0 / l => Err(invalid(
                    "opt.eta",
                    format!("{eta} violates the step bound eta <= 1/L (L = {l})"),
                )),
                _ => Ok(()),
            }
        };
        if self.schedule.form != ScheduleForm::default() && opt.scheme != Scheme::NagDecreasing {
            return Err(invalid("schedule.form", "only applies to nag-decreasing"));
        }
        let mut params = match opt.scheme {
            Scheme::Gd => {
                let eta = need(opt.eta, "opt.eta")?;
                eta_gate(eta)?;
                OptimizerParams::gd(eta).map_err(param_error)?
            }
            Scheme::Nag => {
                let eta = need(opt.eta, "opt.eta")?;
                eta_gate(eta)?;
                OptimizerParams::nag(need(mu_or_declared, "opt.mu")?, eta).map_err(param_error)?
            }
            Scheme::Agnes => {
                let sigma_m = opt.sigma_m.unwrap_or(noise.sigma_m);
                OptimizerParams::agnes(
                    need(mu_or_declared, "opt.mu")?,
                    need(opt.eta, "opt.eta")?,
                    sigma_m,
                    l,
                )
                .map_err(param_error)?
            }
            Scheme::NagDecreasing => {
                if opt.eta.is_some() {
                    return Err(invalid("opt.eta", "nag-decreasing sets its own schedule"));
                }
                let l = need(l, "objective")?;
                OptimizerParams::nag_decreasing(
                    need(mu_or_declared, "opt.mu")?,
                    l,
                    self.schedule.form,
                )
                .map_err(param_error)?
            }
            Scheme::HeavyBallFlow => {
                if !noise.is_exact() {
                    return Err(invalid(
                        "noise.kind",
                        "the heavy-ball flow takes exact gradients",
                    ));
                }
                let p =
                    OptimizerParams::heavy_ball(need(mu_or_declared, "opt.mu")?, l, opt.horizon)
                        .map_err(param_error)?;
                match opt.dt {
                    Some(dt) if !(dt > 0.0 && dt.is_finite()) => {
                        return Err(invalid("opt.dt", format!("{dt} must be positive")))
                    }
                    Some(dt) => p.with_dt(dt),
                    None => p,
                }
            }
        };
        if opt.scheme != Scheme::HeavyBallFlow {
            if opt.dt.is_some() {
                return Err(invalid("opt.dt", "only applies to heavy-ball-flow"));
            }
            params = params.with_steps(steps()?).with_smoothness(l);
        }
        if let Some(every) = opt.record_every {
            if every == 0 {
                return Err(invalid("opt.record_every", "must be at least 1"));
            }
            params = params.with_record_every(every);
        }

        let seeds = self
            .seeds
            .as_ref()
            .map_or_else(|| vec![noise.seed], Seeds::expand);
        if seeds.is_empty() {
            return Err(invalid("seeds", "empty"));
        }
        for (i, &t) in self.certify.iter().enumerate() {
            self.check_certifiable(t, &objective, &params, &noise)
                .map_err(|m| invalid(&format!("certify[{i}]"), m))?;
        }
        if self
            .certify
            .iter()
            .any(|t| matches!(t, Theorem::Discrete | Theorem::Additive))
        {
            precondition(&objective, &params)?;
        }
        Ok(Experiment {
            objective,
            params,
            noise,
            seeds,
            x0: opt.x0.clone(),
            v0: opt.v0.clone(),
            certify: self.certify.clone(),
        })
    }

    fn check_certifiable(
        &self,
        theorem: Theorem,
        objective: &ObjectiveSpec,
        params: &OptimizerParams,
        noise: &NoiseModel,
    ) -> Result<(), String> {
        let scheme = params.scheme;
        let expected = match theorem {
            Theorem::Continuous | Theorem::Global => Scheme::HeavyBallFlow,
            Theorem::Discrete | Theorem::Additive => Scheme::Nag,
            Theorem::Decreasing => Scheme::NagDecreasing,
            Theorem::Agnes => Scheme::Agnes,
        };
        if scheme != expected {
            return Err(format!(
                "{theorem} needs scheme {expected:?}, got {scheme:?}"
            ));
        }
        match theorem {
            Theorem::Discrete if !noise.is_exact() => {
                Err("discrete needs noise.kind = \"zero\"".into())
            }
            Theorem::Additive
                if noise.kind != NoiseKind::GaussianPrototype || noise.sigma_m != 0.0 =>
            {
                Err("additive needs gaussian noise with sigma_m = 0".into())
            }
            Theorem::Global
                if !objective
                    .projection
                    .as_ref()
                    .is_some_and(|p| p.sublevel_alpha.is_finite()) =>
            {
                Err("global needs a finite certified sublevel set".into())
            }
            Theorem::Continuous | Theorem::Global => Ok(()),
            _ if objective
                .projection
                .as_ref()
                .and_then(|p| p.linear_projector())
                .is_none() =>
            {
                Err(format!("{theorem} needs an affine minimizer set"))
            }
            _ => Ok(()),
        }
    }
}

/// `eps <= sqrt(mu / eta)` for the sampled negative curvature `eps`.
fn precondition(objective: &ObjectiveSpec, params: &OptimizerParams) -> Result<(), HarnessError> {
    let region = Region::default_for(objective);
    let eps = probe_negative_curvature(objective, &region, PRECONDITION_SAMPLES, 0)
        .map_err(|e| invalid("objective", format!("negative-curvature probe failed: {e}")))?;
    let limit = (params.mu / params.eta).sqrt();
    if eps > limit {
        return Err(invalid(
            "opt.eta",
            format!("sampled negative curvature eps = {eps} exceeds sqrt(mu/eta) = {limit}"),
        ));
    }
    Ok(())
}

impl Experiment {
    pub fn horizon(&self) -> Horizon {
        self.params.horizon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NAG: &str = r#"
objective = "quad{0,0.01,4}"
output = "out"
certify = ["discrete"]
opt.scheme = "nag"
opt.eta = 0.25
opt.mu = 0.01
opt.horizon = 500
opt.x0 = [1.0, 1.0, 1.0]
"#;

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::from_toml(NAG).unwrap();
        let again = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
        let e = c.validate().unwrap();
        assert_eq!(e.params.step_count(), 500);
        assert_eq!(e.seeds, vec![0]);
    }

    #[test]
    fn seed_range_and_targets_round_trip() {
        let text =
            "output = \"o\"\nreproduce = \"certify-agnes\"\nseeds = { start = 5, count = 3 }\n";
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.reproduce, Some(Target::Certify(Theorem::Agnes)));
        assert_eq!(c.seeds.as_ref().unwrap().expand(), vec![5, 6, 7]);
        assert_eq!(
            ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap(),
            c
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{NAG}opt.etta = 1.0\n");
        assert!(matches!(
            ExperimentConfig::from_toml(&text),
            Err(HarnessError::Parse(_))
        ));
    }

    #[test]
    fn step_bound_names_field() {
        let text = NAG.replace("opt.eta = 0.25", "opt.eta = 0.5");
        match ExperimentConfig::from_toml(&text).unwrap().validate() {
            Err(HarnessError::Config { path, message }) => {
                assert_eq!(path, "opt.eta");
                assert!(message.contains("eta <= 1/L"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn certify_needs_matching_scheme() {
        let text = NAG.replace("opt.scheme = \"nag\"", "opt.scheme = \"gd\"");
        match ExperimentConfig::from_toml(&text).unwrap().validate() {
            Err(HarnessError::Config { path, .. }) => assert_eq!(path, "certify[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_curvature_precondition() {
        let text = r#"
objective = "product{2,1,1,2,1.5}"
output = "out"
certify = ["discrete"]
opt.scheme = "nag"
opt.eta = 1.0
opt.mu = 0.5
opt.horizon = 10
opt.x0 = [0.5, 0.5]
"#;
        match ExperimentConfig::from_toml(text).unwrap().validate() {
            Err(HarnessError::Config { path, message }) => {
                assert_eq!(path, "opt.eta");
                assert!(message.contains("negative curvature"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_objective() {
        let text = NAG.replace("quad{0,0.01,4}", "banana");
        match ExperimentConfig::from_toml(&text).unwrap().validate() {
            Err(HarnessError::Config { path, .. }) => assert_eq!(path, "objective"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
