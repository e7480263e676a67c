use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::output::{lyapunov_csv, write_atomic};
use super::HarnessError;
use crate::lyapunov::{
    certify_continuous, certify_global, discrete_lyapunov_agnes, discrete_lyapunov_decreasing,
    discrete_lyapunov_nag, GlobalEntry, LyapunovError, LyapunovTrace, Theorem, MIN_ENSEMBLE,
};
use crate::noise::NoiseModel;
use crate::objectives::{
    make_ellipse_quartic, parse_objective_id, ObjectiveSpec, ELLIPSE_QUARTIC_MU,
};
use crate::optimizers::{run_discrete, run_ensemble, OptimizerParams, ScheduleForm};

/// Everything one certification needs.
#[derive(Debug, Clone)]
pub struct CertifySetup {
    pub objective: ObjectiveSpec,
    pub params: OptimizerParams,
    pub noise: NoiseModel,
    pub x0: Vec<f64>,
    pub v0: Option<Vec<f64>>,
    pub seeds: Vec<u64>,
}

fn seeds(n: usize) -> Vec<u64> {
    (0..n as u64).collect()
}

fn parsed(id: &str) -> ObjectiveSpec {
    parse_objective_id(id).expect("built-in objective id")
}

/// The reference experiment for each theorem.
pub fn default_setup(theorem: Theorem) -> Result<CertifySetup, HarnessError> {
    let setup = match theorem {
        Theorem::Continuous => CertifySetup {
            objective: parsed("quad{1}"),
            params: OptimizerParams::heavy_ball(1.0, Some(1.0), 10.0)?.with_dt(1e-3),
            noise: NoiseModel::zero(),
            x0: vec![1.0],
            v0: None,
            seeds: vec![0],
        },
        Theorem::Global => CertifySetup {
            objective: make_ellipse_quartic(),
            params: OptimizerParams::heavy_ball(ELLIPSE_QUARTIC_MU, None, 20.0)?
                .with_dt(1e-3)
                .with_record_every(10),
            noise: NoiseModel::zero(),
            x0: vec![1.5, 1.5],
            v0: None,
            seeds: vec![0],
        },
        Theorem::Discrete => CertifySetup {
            objective: parsed("quad{0,0.01,4}"),
            params: OptimizerParams::nag(0.01, 0.25)?
                .with_steps(500)
                .with_smoothness(Some(4.0)),
            noise: NoiseModel::zero(),
            x0: vec![1.0, 1.0, 1.0],
            v0: None,
            seeds: vec![0],
        },
        Theorem::Additive => CertifySetup {
            objective: parsed("quad{1}"),
            params: OptimizerParams::nag(1.0, 1.0)?
                .with_steps(200)
                .with_smoothness(Some(1.0)),
            noise: NoiseModel::gaussian(1.0, 0.0, 0)?,
            x0: vec![1.0],
            v0: None,
            seeds: seeds(MIN_ENSEMBLE),
        },
        Theorem::Agnes => CertifySetup {
            objective: parsed("quad{0.01,1}"),
            params: OptimizerParams::agnes(0.01, 0.5, 1.0, Some(1.0))?.with_steps(200),
            noise: NoiseModel::gaussian(0.0, 1.0, 0)?,
            x0: vec![1.0, 1.0],
            v0: None,
            seeds: seeds(MIN_ENSEMBLE),
        },
        Theorem::Decreasing => CertifySetup {
            objective: parsed("quad{0.04,1}"),
            params: OptimizerParams::nag_decreasing(0.04, 1.0, ScheduleForm::Appendix)?
                .with_steps(1000),
            noise: NoiseModel::gaussian(1.0, 0.0, 0)?,
            x0: vec![1.0, 1.0],
            v0: None,
            seeds: seeds(MIN_ENSEMBLE),
        },
    };
    Ok(setup)
}

/// The reference experiment of `theorem` moved to another objective, using
/// its declared constants and `x0 = (1, ..., 1)` unless given.
pub fn setup_for(
    theorem: Theorem,
    objective: ObjectiveSpec,
    x0: Option<Vec<f64>>,
) -> Result<CertifySetup, HarnessError> {
    let base = default_setup(theorem)?;
    let mu = objective
        .sc_mu
        .ok_or(LyapunovError::MissingConstant("strong convexity mu"))?;
    let l = objective.smoothness_l;
    let need_l = || l.ok_or(LyapunovError::MissingConstant("smoothness L"));
    let params = match theorem {
        Theorem::Continuous | Theorem::Global => {
            OptimizerParams::heavy_ball(mu, l, 10.0 / mu.sqrt().min(1.0))?
                .with_record_every(base.params.record_every)
        }
        Theorem::Discrete | Theorem::Additive => {
            let l = need_l()?;
            OptimizerParams::nag(mu, 1.0 / l)?
                .with_steps(base.params.step_count())
                .with_smoothness(Some(l))
        }
        Theorem::Agnes => {
            let l = need_l()?;
            let s = base.params.sigma_m;
            OptimizerParams::agnes(mu, 1.0 / (l * (1.0 + s * s)), s, Some(l))?
                .with_steps(base.params.step_count())
        }
        Theorem::Decreasing => {
            OptimizerParams::nag_decreasing(mu, need_l()?, ScheduleForm::Appendix)?
                .with_steps(base.params.step_count())
        }
    };
    let x0 = x0.unwrap_or_else(|| vec![1.0; objective.dim()]);
    Ok(CertifySetup {
        objective,
        params,
        x0,
        ..base
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyOutcome {
    pub theorem: Theorem,
    pub objective_id: String,
    pub runs: usize,
    pub pass: bool,
    pub max_ratio: f64,
    pub worst_target: f64,
    pub final_measured: f64,
    pub final_bound: f64,
    /// Set for the global theorem.
    pub entry: Option<GlobalEntryReport>,
    pub seconds: f64,
    #[serde(skip)]
    pub trace: LyapunovTrace,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GlobalEntryReport {
    pub time: f64,
    pub f_gap: f64,
    pub dist: f64,
}

impl From<GlobalEntry> for GlobalEntryReport {
    fn from(e: GlobalEntry) -> Self {
        Self {
            time: e.time,
            f_gap: e.f_gap,
            dist: e.dist,
        }
    }
}

impl CertifyOutcome {
    /// One-line verdict.
    pub fn verdict(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        format!(
            "{}: {status} on {} ({} run(s), {} entries, max ratio {:.6} vs target {:.6}, final {:.3e} <= {:.3e}, {:.2}s)",
            self.theorem,
            self.objective_id,
            self.runs,
            self.trace.values.len(),
            self.max_ratio,
            self.worst_target,
            self.final_measured,
            self.final_bound,
            self.seconds
        )
    }

    pub fn write_csv(&self, dir: &Path) -> Result<(), HarnessError> {
        let path = dir.join(format!("lyapunov_{}.csv", self.theorem));
        write_atomic(&path, &lyapunov_csv(&self.trace)?)
    }
}

/// Run the experiment and evaluate the theorem's certificate.
pub fn certify_setup(
    theorem: Theorem,
    setup: &CertifySetup,
) -> Result<CertifyOutcome, HarnessError> {
    let start = Instant::now();
    let CertifySetup {
        objective,
        params,
        noise,
        x0,
        v0,
        seeds,
    } = setup;
    let mut entry = None;
    let (trace, runs) = match theorem {
        Theorem::Continuous => (certify_continuous(objective, params, x0)?.1, 1),
        Theorem::Global => {
            let (_, trace, e) = certify_global(objective, params, x0)?;
            entry = Some(e.into());
            (trace, 1)
        }
        Theorem::Discrete => {
            let rec = run_discrete(objective, noise, params, x0, v0.as_deref())?;
            (discrete_lyapunov_nag(objective, &rec, params)?, 1)
        }
        Theorem::Additive | Theorem::Agnes | Theorem::Decreasing => {
            let recs = if v0.is_some() {
                seeds
                    .iter()
                    .map(|&s| {
                        run_discrete(objective, &noise.with_seed(s), params, x0, v0.as_deref())
                    })
                    .collect::<Result<Vec<_>, _>>()?
            } else {
                run_ensemble(objective, noise, params, x0, seeds)?
            };
            let trace = if theorem == Theorem::Decreasing {
                discrete_lyapunov_decreasing(objective, &recs, params, noise)?
            } else {
                discrete_lyapunov_agnes(objective, &recs, params, noise)?
            };
            (trace, recs.len())
        }
    };
    let last = trace.endpoint.last().copied();
    let worst_target = trace
        .contraction_target
        .iter()
        .copied()
        .filter(|t| t.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CertifyOutcome {
        theorem,
        objective_id: objective.id().to_string(),
        runs,
        pass: trace.passed(),
        max_ratio: trace.max_ratio(),
        worst_target,
        final_measured: last.map_or(f64::NAN, |e| e.measured),
        final_bound: last.map_or(f64::NAN, |e| e.bound),
        entry,
        seconds: start.elapsed().as_secs_f64(),
        trace,
    })
}

/// `certify <theorem> [--objective id]`.
pub fn certify(
    theorem: Theorem,
    objective: Option<&str>,
    x0: Option<Vec<f64>>,
) -> Result<CertifyOutcome, HarnessError> {
    let setup = match objective {
        None => {
            let mut s = default_setup(theorem)?;
            if let Some(x0) = x0 {
                s.x0 = x0;
            }
            s
        }
        Some(id) => setup_for(theorem, parse_objective_id(id)?, x0)?,
    };
    certify_setup(theorem, &setup)
}
