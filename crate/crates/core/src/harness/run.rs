use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::certify::{certify, certify_setup, CertifySetup};
use super::config::{Experiment, ExperimentConfig, Target};
use super::output::{csv_table, header, num, trajectory_csv, write_atomic, write_json};
use super::reproduce::{example1_table, reproduce_fig2, reproduce_fig4, MuFallback, EXAMPLE1_GRID};
use super::HarnessError;
use crate::lyapunov::lyapunov_values;
use crate::noise::NoiseModel;
use crate::optimizers::{run_discrete, run_flow, OptimizerParams, TrajectoryRecord};
use crate::stats::MeanEstimate;

/// Per-seed trajectory files written by one run; larger ensembles also get
/// an aggregate `ensemble.csv`.
pub const MAX_TRAJECTORY_FILES: usize = 16;
/// Samples per grid point of the constants table.
pub const TABLE_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Serialize)]
pub struct CertificationSummary {
    pub theorem: String,
    pub pass: bool,
    pub verdict: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub objective: Option<String>,
    pub reproduce: Option<String>,
    pub params: Option<OptimizerParams>,
    pub noise: Option<NoiseModel>,
    pub x0: Option<Vec<f64>>,
    pub seeds: usize,
    pub final_f_mean: Option<f64>,
    pub final_f_std_error: Option<f64>,
    pub certifications: Vec<CertificationSummary>,
    pub artifacts: Vec<PathBuf>,
    /// Report lines of a reproduction.
    pub lines: Vec<String>,
    pub pass: bool,
}

impl RunSummary {
    fn empty() -> Self {
        Self {
            objective: None,
            reproduce: None,
            params: None,
            noise: None,
            x0: None,
            seeds: 0,
            final_f_mean: None,
            final_f_std_error: None,
            certifications: Vec::new(),
            artifacts: Vec::new(),
            lines: Vec::new(),
            pass: true,
        }
    }
}

fn run_records(e: &Experiment) -> Result<Vec<TrajectoryRecord>, HarnessError> {
    if !e.params.scheme.is_discrete() {
        return Ok(vec![run_flow(
            &e.objective,
            &e.params,
            &e.x0,
            e.v0.as_deref(),
        )?]);
    }
    e.seeds
        .par_iter()
        .map(|&s| {
            run_discrete(
                &e.objective,
                &e.noise.with_seed(s),
                &e.params,
                &e.x0,
                e.v0.as_deref(),
            )
            .map_err(HarnessError::from)
        })
        .collect()
}

/// Ensemble mean and standard error of `f` per recorded step.
fn ensemble_csv(records: &[TrajectoryRecord]) -> Result<Vec<u8>, HarnessError> {
    let its = records[0]
        .iterates()
        .ok_or(HarnessError::Parse("flow ensemble".into()))?;
    let rows = its.iter().enumerate().map(|(k, it)| {
        let fs: Vec<f64> = records
            .iter()
            .map(|r| r.iterates().map_or(f64::NAN, |s| s[k].f))
            .collect();
        let est = MeanEstimate::from_slice(&fs);
        vec![
            it.n.to_string(),
            num(it.t),
            num(est.mean),
            num(est.std_error),
        ]
    });
    csv_table(&header(&["n", "t", "f_mean", "f_std_error"]), rows)
}

fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<RunSummary, HarnessError> {
    let e = config.validate()?;
    let records = run_records(&e)?;
    let mut summary = RunSummary::empty();
    for r in records.iter().take(MAX_TRAJECTORY_FILES) {
        let lyap = lyapunov_values(&e.objective, r).ok();
        let path = out.join(format!("trajectory_seed{}.csv", r.seed));
        write_atomic(&path, &trajectory_csv(r, lyap.as_deref())?)?;
        summary.artifacts.push(path);
    }
    if records.len() > 1 {
        let path = out.join("ensemble.csv");
        write_atomic(&path, &ensemble_csv(&records)?)?;
        summary.artifacts.push(path);
    }
    let finals: Vec<f64> = records.iter().map(TrajectoryRecord::final_f).collect();
    let est = MeanEstimate::from_slice(&finals);

    let setup = CertifySetup {
        objective: e.objective.clone(),
        params: e.params,
        noise: e.noise,
        x0: e.x0.clone(),
        v0: e.v0.clone(),
        seeds: e.seeds.clone(),
    };
    for &theorem in &e.certify {
        let outcome = certify_setup(theorem, &setup)?;
        outcome.write_csv(out)?;
        summary
            .artifacts
            .push(out.join(format!("lyapunov_{theorem}.csv")));
        summary.pass &= outcome.pass;
        summary.certifications.push(CertificationSummary {
            theorem: theorem.to_string(),
            pass: outcome.pass,
            verdict: outcome.verdict(),
        });
    }
    summary.objective = Some(e.objective.id().to_string());
    summary.params = Some(e.params);
    summary.noise = Some(e.noise);
    summary.x0 = Some(e.x0.clone());
    summary.seeds = records.len();
    summary.final_f_mean = Some(est.mean);
    summary.final_f_std_error = Some(est.std_error);
    Ok(summary)
}

/// Run a reproduction target and write its artifacts into `out`.
pub fn reproduce(target: Target, out: &Path) -> Result<RunSummary, HarnessError> {
    let mut summary = RunSummary::empty();
    summary.reproduce = Some(target.to_string());
    match target {
        Target::Fig2 => {
            let rep = reproduce_fig2()?;
            rep.write(out)?;
            summary.lines = rep.lines();
            summary.pass = rep.pass();
        }
        Target::Fig4 => {
            let rep = reproduce_fig4(MuFallback::default())?;
            rep.write(out)?;
            summary.lines = rep.lines();
            summary.pass = rep.pass();
        }
        Target::Example1Table => {
            let table = example1_table(&EXAMPLE1_GRID, TABLE_SAMPLES)?;
            table.write(out)?;
            summary.lines = table.lines();
            summary.pass = table.pass();
        }
        Target::Certify(theorem) => {
            let outcome = certify(theorem, None, None)?;
            outcome.write_csv(out)?;
            summary.lines = vec![outcome.verdict()];
            summary.pass = outcome.pass;
        }
    }
    Ok(summary)
}

/// Execute a config: a reproduction target or a (possibly certified) run.
/// Writes `summary.json` next to the other artifacts.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    let out = config.output.as_path();
    let mut summary = match config.reproduce {
        Some(target) => reproduce(target, out)?,
        None => run_experiment(config, out)?,
    };
    let path = out.join("summary.json");
    summary.artifacts.push(path.clone());
    write_json(&path, &summary)?;
    Ok(summary)
}
