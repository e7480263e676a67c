use std::path::Path;

use serde::Serialize;

use super::output::{csv_table, header, num, trajectory_csv, write_atomic, write_json};
use super::HarnessError;
use crate::geometry::{diagnose, GeometryReport, Region};
use crate::linalg;
use crate::noise::NoiseModel;
use crate::objectives::{
    make_ellipse_quartic, make_oscillatory_1d, oscillatory_constants, ELLIPSE_QUARTIC_MU,
};
use crate::optimizers::{run_discrete, OptimizerParams, TrajectoryRecord};

/// Shared initial point of the two `fig2` runs.
pub const FIG2_X0: [f64; 2] = [1.5, 1.5];
/// `(eta, steps)` of the two runs.
pub const FIG2_RUNS: [(f64, usize); 2] = [(1e-2, 800), (1e-3, 8000)];

#[derive(Debug, Clone, Serialize)]
pub struct Fig2Run {
    pub eta: f64,
    pub steps: usize,
    pub final_f: f64,
    pub final_x: Vec<f64>,
    /// `|x^2/2 + 3 y^2 - 1|` at the final iterate.
    pub ellipse_residual: f64,
    #[serde(skip)]
    pub record: TrajectoryRecord,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig2Report {
    pub x0: [f64; 2],
    pub mu: f64,
    pub runs: Vec<Fig2Run>,
    /// Distance between the two limit points.
    pub separation: f64,
    /// First time `t = n sqrt(eta)` at which the runs are more than 0.1 apart.
    pub divergence_time: Option<f64>,
    pub converged: bool,
    pub on_manifold: bool,
    pub far_apart: bool,
}

impl Fig2Report {
    pub fn pass(&self) -> bool {
        self.converged && self.on_manifold && self.far_apart
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .runs
            .iter()
            .map(|r| {
                format!(
                    "eta={:e} steps={}: final f={:.3e} x=({:.6}, {:.6}) ellipse residual={:.3e}",
                    r.eta, r.steps, r.final_f, r.final_x[0], r.final_x[1], r.ellipse_residual
                )
            })
            .collect();
        out.push(format!(
            "limit-point separation={:.4} divergence time={} -> {}",
            self.separation,
            self.divergence_time
                .map_or_else(|| "none".to_string(), |t| format!("{t:.3}")),
            if self.pass() { "PASS" } else { "FAIL" }
        ));
        out
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        for r in &self.runs {
            let path = dir.join(format!("fig2_eta{:e}.csv", r.eta));
            write_atomic(&path, &trajectory_csv(&r.record, None)?)?;
        }
        write_json(&dir.join("fig2_summary.json"), self)
    }
}

/// Nesterov on the ellipse quartic with two step sizes from one point.
pub fn reproduce_fig2() -> Result<Fig2Report, HarnessError> {
    let objective = make_ellipse_quartic();
    let mu = ELLIPSE_QUARTIC_MU;
    let mut runs = Vec::new();
    for (eta, steps) in FIG2_RUNS {
        let params = OptimizerParams::nag(mu, eta)?.with_steps(steps);
        let record = run_discrete(&objective, &NoiseModel::zero(), &params, &FIG2_X0, None)?;
        let x = record.final_x().to_vec();
        runs.push(Fig2Run {
            eta,
            steps,
            final_f: record.final_f(),
            ellipse_residual: (x[0] * x[0] / 2.0 + 3.0 * x[1] * x[1] - 1.0).abs(),
            final_x: x,
            record,
        });
    }
    let separation = linalg::distance(&runs[0].final_x, &runs[1].final_x);
    // Compare the coarse run with the fine run at equal time t = n sqrt(eta).
    let coarse = runs[0].record.iterates().expect("discrete");
    let fine = runs[1].record.iterates().expect("discrete");
    let divergence_time = coarse.iter().find_map(|c| {
        let k = fine.partition_point(|s| s.t < c.t).min(fine.len() - 1);
        (linalg::distance(&c.x, &fine[k].x) > 0.1).then_some(c.t)
    });
    Ok(Fig2Report {
        x0: FIG2_X0,
        mu,
        converged: runs.iter().all(|r| r.final_f <= 1e-4),
        on_manifold: runs.iter().all(|r| r.ellipse_residual <= 1e-2),
        far_apart: separation >= 0.1,
        runs,
        separation,
        divergence_time,
    })
}

pub const FIG4_R: f64 = 6.0;
pub const FIG4_EPS: [f64; 3] = [0.075, 0.08, 0.085];
pub const FIG4_X0: f64 = 1.0;
pub const FIG4_STEPS: usize = 2000;

/// Where Nesterov's `mu` comes from when `1 - eps sqrt(1 + 4R^2) <= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuFallback {
    /// `|1 - eps sqrt(1 + 4R^2)|`
    #[default]
    ScMagnitude,
    /// `(1 - eps sqrt(1 + R^2))^2 / (1 + eps)`
    Pl,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig4Row {
    pub eps: f64,
    pub sc_threshold: f64,
    pub smoothness_l: f64,
    pub mu: f64,
    pub mu_source: &'static str,
    pub gd_final_f: f64,
    pub nag_final_f: f64,
    pub gd_not_worse: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig4Report {
    pub r: f64,
    pub x0: f64,
    pub steps: usize,
    pub fallback: MuFallback,
    pub rows: Vec<Fig4Row>,
}

impl Fig4Report {
    /// Gradient descent is not worse than Nesterov at the largest `eps`.
    pub fn pass(&self) -> bool {
        self.rows.last().is_some_and(|r| r.gd_not_worse)
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                format!(
                    "eps={} R={}: eps*sqrt(1+4R^2)={:.4} L={:.4} mu={:.4} ({}) GD f={:.6e} NAG f={:.6e} {}",
                    r.eps,
                    self.r,
                    1.0 - r.sc_threshold,
                    r.smoothness_l,
                    r.mu,
                    r.mu_source,
                    r.gd_final_f,
                    r.nag_final_f,
                    if r.gd_not_worse { "GD<=NAG" } else { "NAG<GD" }
                )
            })
            .collect();
        out.push(format!(
            "fig4 -> {}",
            if self.pass() { "PASS" } else { "FAIL" }
        ));
        out
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let rows = self.rows.iter().map(|r| {
            vec![
                num(r.eps),
                num(r.sc_threshold),
                num(r.smoothness_l),
                num(r.mu),
                r.mu_source.to_string(),
                num(r.gd_final_f),
                num(r.nag_final_f),
                r.gd_not_worse.to_string(),
            ]
        });
        let head = header(&[
            "eps",
            "sc_threshold",
            "L",
            "mu",
            "mu_source",
            "gd_final_f",
            "nag_final_f",
            "gd_not_worse",
        ]);
        write_atomic(&dir.join("fig4.csv"), &csv_table(&head, rows)?)?;
        write_json(&dir.join("fig4_summary.json"), self)
    }
}

/// Gradient descent against Nesterov at `eta = 1/L` on the oscillatory family.
pub fn reproduce_fig4(fallback: MuFallback) -> Result<Fig4Report, HarnessError> {
    let mut rows = Vec::new();
    for eps in FIG4_EPS {
        let objective = make_oscillatory_1d(eps, FIG4_R)?;
        let c = oscillatory_constants(eps, FIG4_R);
        let eta = 1.0 / c.smoothness_l;
        let (mu, mu_source) = if c.sc_threshold > 0.0 {
            (c.sc_threshold, "sc")
        } else {
            match (fallback, c.pl_constant) {
                (MuFallback::Pl, Some(pl)) => (pl, "pl"),
                _ => (c.sc_threshold.abs(), "sc-magnitude"),
            }
        };
        let zero = NoiseModel::zero();
        let gd = OptimizerParams::gd(eta)?.with_steps(FIG4_STEPS);
        let nag = OptimizerParams::nag(mu, eta)?.with_steps(FIG4_STEPS);
        let gd_f = run_discrete(&objective, &zero, &gd, &[FIG4_X0], None)?.final_f();
        let nag_f = run_discrete(&objective, &zero, &nag, &[FIG4_X0], None)?.final_f();
        rows.push(Fig4Row {
            eps,
            sc_threshold: c.sc_threshold,
            smoothness_l: c.smoothness_l,
            mu,
            mu_source,
            gd_final_f: gd_f,
            nag_final_f: nag_f,
            gd_not_worse: gd_f <= nag_f,
        });
    }
    Ok(Fig4Report {
        r: FIG4_R,
        x0: FIG4_X0,
        steps: FIG4_STEPS,
        fallback,
        rows,
    })
}

pub const EXAMPLE1_GRID: [(f64, f64); 7] = [
    (0.05, 2.0),
    (0.1, 2.0),
    (0.2, 2.0),
    (0.3, 2.0),
    (0.075, 6.0),
    (0.08, 6.0),
    (0.085, 6.0),
];
/// Relative agreement required of the two sharp columns.
pub const SHARP_TOLERANCE: f64 = 5e-3;

#[derive(Debug, Clone, Serialize)]
pub struct Example1Row {
    pub eps: f64,
    pub r: f64,
    /// `eps sqrt(1 + R^2)`, `eps sqrt(1 + 4R^2)`, `eps sqrt(1 + 5R^2 + 4R^4)`.
    pub thresholds: [f64; 3],
    pub pl_closed: Option<f64>,
    pub sc_closed: f64,
    pub l_closed: f64,
    pub report: GeometryReport,
    /// Empirical PL constant is at least the closed-form lower bound.
    pub pl_holds: bool,
    /// `None` when the closed form is not positive.
    pub sc_sharp: Option<bool>,
    pub l_sharp: bool,
}

impl Example1Row {
    fn status(t: f64) -> &'static str {
        if t < 1.0 {
            "holds (<1)"
        } else {
            "fails (>=1)"
        }
    }

    pub fn pass(&self) -> bool {
        self.pl_holds && self.sc_sharp != Some(false) && self.l_sharp
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Example1Table {
    pub samples: usize,
    pub rows: Vec<Example1Row>,
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

impl Example1Table {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(Example1Row::pass)
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![format!(
            "{:>6} {:>4} | {:>8} {:>8} {:>8} | {:>10} {:>10} {:>10} | {:>10} {:>10} {:>10} | columns",
            "eps", "R", "PL thr", "sc thr", "L thr", "PL", "mu-sc", "L", "PL emp", "sc emp", "L emp"
        )];
        for r in &self.rows {
            out.push(format!(
                "{:>6} {:>4} | {:>8.4} {:>8.4} {:>8.4} | {:>10} {:>10.6} {:>10.6} | {:>10.6} {:>10.6} {:>10.6} | PL {} / sc {} / L {}{}{}",
                r.eps,
                r.r,
                r.thresholds[0],
                r.thresholds[1],
                r.thresholds[2],
                r.pl_closed.map_or_else(|| "-".to_string(), |v| format!("{v:.6}")),
                r.sc_closed,
                r.l_closed,
                r.report.pl_constant_emp,
                r.report.sc_wrt_min_emp,
                r.report.curvature_sup,
                Example1Row::status(r.thresholds[0]),
                Example1Row::status(r.thresholds[1]),
                Example1Row::status(r.thresholds[2]),
                match r.sc_sharp {
                    Some(true) => ", sc sharp",
                    Some(false) => ", sc NOT sharp",
                    None => "",
                },
                if r.l_sharp { ", L sharp" } else { ", L NOT sharp" },
            ));
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let head = header(&[
            "eps",
            "R",
            "thr_pl",
            "thr_sc",
            "thr_l",
            "pl_closed",
            "sc_closed",
            "l_closed",
            "pl_emp",
            "sc_emp",
            "l_emp",
            "quasar_gamma",
            "pl_holds",
            "sc_sharp",
            "l_sharp",
        ]);
        let opt = |v: Option<f64>| v.map_or_else(String::new, num);
        let rows = self.rows.iter().map(|r| {
            vec![
                num(r.eps),
                num(r.r),
                num(r.thresholds[0]),
                num(r.thresholds[1]),
                num(r.thresholds[2]),
                opt(r.pl_closed),
                num(r.sc_closed),
                num(r.l_closed),
                num(r.report.pl_constant_emp),
                num(r.report.sc_wrt_min_emp),
                num(r.report.curvature_sup),
                opt(r.report.quasar_gamma),
                r.pl_holds.to_string(),
                r.sc_sharp.map_or_else(String::new, |b| b.to_string()),
                r.l_sharp.to_string(),
            ]
        });
        write_atomic(&dir.join("example1_table.csv"), &csv_table(&head, rows)?)
    }
}

/// Closed-form constants of the oscillatory family next to sampled ones.
pub fn example1_table(grid: &[(f64, f64)], samples: usize) -> Result<Example1Table, HarnessError> {
    let mut rows = Vec::new();
    for &(eps, r) in grid {
        let objective = make_oscillatory_1d(eps, r)?;
        let c = oscillatory_constants(eps, r);
        let report = diagnose(&objective, &Region::default_for(&objective), samples, 0)?;
        let thresholds = [
            eps * (1.0 + r * r).sqrt(),
            eps * (1.0 + 4.0 * r * r).sqrt(),
            eps * (1.0 + 5.0 * r * r + 4.0 * r.powi(4)).sqrt(),
        ];
        rows.push(Example1Row {
            eps,
            r,
            thresholds,
            pl_closed: c.pl_constant,
            sc_closed: c.sc_threshold,
            l_closed: c.smoothness_l,
            pl_holds: c.pl_constant.is_none_or(|pl| report.pl_constant_emp >= pl),
            sc_sharp: (c.sc_threshold > 0.0)
                .then(|| relative(report.sc_wrt_min_emp, c.sc_threshold) <= SHARP_TOLERANCE),
            l_sharp: relative(report.curvature_sup, c.smoothness_l) <= SHARP_TOLERANCE,
            report,
        });
    }
    Ok(Example1Table { samples, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_increase_left_to_right() {
        let t = example1_table(&EXAMPLE1_GRID[..2], 1000).unwrap();
        for r in &t.rows {
            assert!(r.thresholds[0] <= r.thresholds[1] && r.thresholds[1] <= r.thresholds[2]);
        }
    }

    #[test]
    fn fig4_sources() {
        let rep = reproduce_fig4(MuFallback::Pl).unwrap();
        assert_eq!(rep.rows[0].mu_source, "sc");
        assert_eq!(rep.rows[2].mu_source, "pl");
    }
}
