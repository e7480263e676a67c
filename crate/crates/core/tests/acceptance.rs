//! Acceptance gate. Prints one `[PASS]`/`[FAIL]` line per criterion and exits
//! non-zero if any criterion fails. Every criterion also has a wall-clock budget.
//!
//! Bounds are recomputed here from closed forms rather than read back from the
//! library.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use momentum_core::geometry::{check_projection_monotonicity, line_probe, random_tube_curve};
use momentum_core::harness::{example1_table, reproduce_fig2, reproduce_fig4, MuFallback};
use momentum_core::lyapunov::{
    certify_continuous, discrete_lyapunov_agnes, discrete_lyapunov_decreasing,
    discrete_lyapunov_nag,
};
use momentum_core::noise::NoiseModel;
use momentum_core::objectives::{parse_objective_id, ObjectiveSpec};
use momentum_core::optimizers::{
    run_discrete, run_ensemble, run_flow, OptimizerParams, ScheduleForm, TrajectoryRecord,
};

type Check = Result<(bool, String), Box<dyn std::error::Error>>;
/// Tag, description, budget in seconds, check.
type Criterion = (&'static str, &'static str, f64, fn() -> Check);

const ENSEMBLE: u64 = 1000;

fn quad(id: &str) -> ObjectiveSpec {
    parse_objective_id(id).expect("objective id")
}

fn seeds() -> Vec<u64> {
    (0..ENSEMBLE).collect()
}

/// Sample mean and standard error, computed directly.
fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn f_at(records: &[TrajectoryRecord], n: usize) -> Vec<f64> {
    records
        .iter()
        .map(|r| {
            let it = &r.iterates().expect("discrete")[n];
            assert_eq!(it.n, n);
            it.f
        })
        .collect()
}

fn half_sq(x: &[f64], w: &[f64]) -> f64 {
    0.5 * x.iter().zip(w).map(|(a, b)| b * a * a).sum::<f64>()
}

fn ac1() -> Check {
    let (mu, eta) = (0.01, 0.25);
    let lam = [0.0, 0.01, 4.0];
    let f = quad("quad{0,0.01,4}");
    let params = OptimizerParams::nag(mu, eta)?.with_steps(500);
    let rec = run_discrete(&f, &NoiseModel::zero(), &params, &[1.0, 1.0, 1.0], None)?;
    let trace = discrete_lyapunov_nag(&f, &rec, &params)?;

    // Minimizers are the first axis; its projector keeps coordinate 0.
    let q = 1.0 - (mu * eta).sqrt();
    let s = (mu * eta).sqrt();
    let coef = (1.0 + s).powi(2) / (1.0 - s);
    let l0 = half_sq(&[1.0, 1.0, 1.0], &lam) + 0.5 * mu * 2.0;
    let lyap = |x: &[f64], v: &[f64]| {
        let look: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + eta.sqrt() * b).collect();
        let w1 = v[1] + mu.sqrt() * look[1];
        let w2 = v[2] + mu.sqrt() * look[2];
        half_sq(x, &lam) + 0.5 * (w1 * w1 + w2 * w2) + 0.5 * coef * v[0] * v[0]
    };

    let its = rec.iterates().expect("discrete");
    let mut worst_ratio = 0.0_f64;
    let mut endpoint_ok = true;
    for (k, it) in its.iter().enumerate() {
        endpoint_ok &= it.f <= q.powi(it.n as i32) * l0 * (1.0 + 1e-12);
        if k > 0 {
            let r = lyap(&it.x, &it.v) / lyap(&its[k - 1].x, &its[k - 1].v);
            worst_ratio = worst_ratio.max(r);
        }
    }
    let own_ok = worst_ratio <= q * (1.0 + 1e-12);
    let lib_agrees = trace
        .values
        .iter()
        .zip(its)
        .all(|(v, it)| (v - lyap(&it.x, &it.v)).abs() <= 1e-12 * v.abs().max(1e-300));
    Ok((
        own_ok && endpoint_ok && trace.passed() && lib_agrees && its.len() == 501,
        format!("max L_(n+1)/L_n = {worst_ratio:.6} <= {q}, L0 = {l0}, endpoint bound held at all 501 steps"),
    ))
}

fn ac2() -> Check {
    let f = quad("quad{1}");
    let params = OptimizerParams::heavy_ball(1.0, Some(1.0), 10.0)?.with_dt(1e-3);
    let rec = run_flow(&f, &params, &[1.0], None)?;
    let (_, trace) = certify_continuous(&f, &params, &[1.0])?;
    let mut sup = 0.0_f64;
    let mut decay_ok = true;
    for s in rec.samples().expect("flow") {
        let exact = (1.0 + s.t) * (-s.t).exp();
        sup = sup.max((s.x[0] - exact).abs());
        decay_ok &= s.f <= (-s.t).exp() * (0.5 + 0.5) + 1e-8;
    }
    Ok((
        sup <= 1e-6 && decay_ok && trace.passed(),
        format!("sup |x - (1+t)e^-t| = {sup:.3e}, f <= e^-t everywhere"),
    ))
}

fn ac3() -> Check {
    let f = quad("quad{1}");
    let params = OptimizerParams::nag(1.0, 1.0)?
        .with_steps(200)
        .with_smoothness(Some(1.0));
    let noise = NoiseModel::gaussian(1.0, 0.0, 0)?;
    let recs = run_ensemble(&f, &noise, &params, &[1.0], &seeds())?;
    let (mean, se) = mean_se(&f_at(&recs, 200));
    // (1 - sqrt(mu eta))^n L0 vanishes; the floor is sigma_a^2 sqrt(eta) / sqrt(mu).
    let bound = 1.0;
    let trace = discrete_lyapunov_agnes(&f, &recs, &params, &noise)?;
    Ok((
        mean <= bound + 4.0 * se && trace.passed(),
        format!("E f(x_200) = {mean:.4} +/- {se:.4} vs floor {bound}"),
    ))
}

fn ac4() -> Check {
    let (mu, eta, l) = (0.01, 0.5, 1.0);
    let f = quad("quad{0.01,1}");
    let x0 = [1.0, 1.0];
    let params = OptimizerParams::agnes(mu, eta, 1.0, Some(l))?.with_steps(200);
    let noise = NoiseModel::gaussian(0.0, 1.0, 0)?;
    let recs = run_ensemble(&f, &noise, &params, &x0, &seeds())?;
    let trace = discrete_lyapunov_agnes(&f, &recs, &params, &noise)?;

    let l0 = half_sq(&x0, &[0.01, 1.0]) + 0.5 * mu * 2.0;
    let q = 1.0 - (mu * eta / 2.0).sqrt();
    let mut ok = trace.passed();
    let mut detail = Vec::new();
    for n in [50, 100, 200] {
        let (mean, se) = mean_se(&f_at(&recs, n));
        let bound = q.powi(n as i32) * l0;
        ok &= mean <= bound + 4.0 * se;
        detail.push(format!("n={n}: {mean:.3e} <= {bound:.3e}"));
    }

    // sigma_m = 0: AGNES must replay Nesterov exactly.
    let additive = NoiseModel::gaussian(1.0, 0.0, 0)?;
    let nag = OptimizerParams::nag(mu, eta)?.with_steps(200);
    let agnes0 = OptimizerParams::agnes(mu, eta, 0.0, Some(l))?.with_steps(200);
    let mut identical = true;
    for seed in 0..10 {
        let a = run_discrete(&f, &additive.with_seed(seed), &nag, &x0, None)?;
        let b = run_discrete(&f, &additive.with_seed(seed), &agnes0, &x0, None)?;
        identical &= a
            .iterates()
            .expect("discrete")
            .iter()
            .zip(b.iterates().expect("discrete"))
            .all(|(p, r)| p.x == r.x && p.v == r.v);
    }
    detail.push(format!("sigma_m=0 bit-identical to NAG: {identical}"));
    Ok((ok && identical, detail.join(", ")))
}

fn ac5() -> Check {
    let (mu, l) = (0.04, 1.0);
    let f = quad("quad{0.04,1}");
    let x0 = [1.0, 1.0];
    let params = OptimizerParams::nag_decreasing(mu, l, ScheduleForm::Appendix)?.with_steps(1000);
    let noise = NoiseModel::gaussian(1.0, 0.0, 0)?;
    let recs = run_ensemble(&f, &noise, &params, &x0, &seeds())?;
    let trace = discrete_lyapunov_decreasing(&f, &recs, &params, &noise)?;

    let n0 = (l / mu).sqrt();
    let l0 = half_sq(&x0, &[mu, 1.0]) + 0.5 * mu * 2.0;
    let mut ok = trace.passed();
    let mut detail = Vec::new();
    for n in [100, 1000] {
        let (mean, se) = mean_se(&f_at(&recs, n));
        let nf = n as f64;
        let bound = (n0 * l0 + 1.0 / mu * (1.0 + nf / n0).ln()) / (nf + n0);
        ok &= mean <= bound + 4.0 * se;
        detail.push(format!("n={n}: {mean:.4} <= {bound:.4}"));
    }
    Ok((ok, detail.join(", ")))
}

fn ac6() -> Check {
    let grid = [(0.05, 2.0), (0.1, 2.0), (0.075, 6.0)];
    let table = example1_table(&grid, 100_000)?;
    let mut ok = table.rows.len() == grid.len();
    let mut detail = Vec::new();
    for (row, &(e, r)) in table.rows.iter().zip(&grid) {
        let r2 = r * r;
        let l = 1.0 + e * (1.0 + 5.0 * r2 + 4.0 * r2 * r2).sqrt();
        let sc = 1.0 - e * (1.0 + 4.0 * r2).sqrt();
        let pl = (1.0 - e * (1.0 + r2).sqrt()).powi(2) / (1.0 + e);
        let rep = &row.report;
        let l_err = (rep.curvature_sup - l).abs() / l;
        ok &= l_err <= 5e-3;
        let sc_err = (rep.sc_wrt_min_emp - sc).abs() / sc;
        if sc > 0.0 {
            ok &= sc_err <= 5e-3;
        }
        ok &= rep.pl_constant_emp >= pl;
        detail.push(format!(
            "({e},{r}): L rel err {l_err:.1e}, sc rel err {sc_err:.1e}, PL {:.4} >= {pl:.4}",
            rep.pl_constant_emp
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn ac7() -> Check {
    let rep = reproduce_fig2()?;
    let mut ok = rep.runs.len() == 2;
    for run in &rep.runs {
        let x = &run.final_x;
        let residual = (x[0] * x[0] / 2.0 + 3.0 * x[1] * x[1] - 1.0).abs();
        ok &= run.final_f <= 1e-4 && residual <= 1e-2;
    }
    let (a, b) = (&rep.runs[0].final_x, &rep.runs[1].final_x);
    let sep = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    ok &= sep >= 0.1;
    Ok((
        ok,
        format!(
            "limit points ({:.4},{:.4}) and ({:.4},{:.4}), separation {sep:.3}",
            a[0], a[1], b[0], b[1]
        ),
    ))
}

fn ac8() -> Check {
    let rep = reproduce_fig4(MuFallback::ScMagnitude)?;
    let row = rep
        .rows
        .iter()
        .find(|r| r.eps == 0.085)
        .ok_or("no row at eps = 0.085")?;
    let pl = reproduce_fig4(MuFallback::Pl)?;
    let pl_row = pl.rows.iter().find(|r| r.eps == 0.085).ok_or("no PL row")?;
    Ok((
        row.gd_final_f <= row.nag_final_f,
        format!(
            "R=6 eps=0.085 mu={:.4}: GD {:.3e} <= NAG {:.3e} (PL-based mu={:.4} would give GD {:.3e} vs NAG {:.3e})",
            row.mu, row.gd_final_f, row.nag_final_f, pl_row.mu, pl_row.gd_final_f, pl_row.nag_final_f
        ),
    ))
}

fn ac9() -> Check {
    let f = quad("sqdist-circle{1,2}");
    let proj = f.projection()?;
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for seed in 0..100 {
        let curve = random_tube_curve(seed, 0.6, 1.4, 1001);
        let rep = check_projection_monotonicity(proj, &curve, 1e-3)?;
        let normalized = rep.min_inner / rep.max_norm_product.max(f64::MIN_POSITIVE);
        worst = worst.min(normalized);
        ok &= rep.pass && normalized >= -1e-6;
    }
    Ok((
        ok,
        format!("100 splines, min normalized <x', z'> = {worst:.3e}"),
    ))
}

fn ac10() -> Check {
    let t_end = 5.0;
    let f = quad("quad{1}");
    let flow = run_flow(
        &f,
        &OptimizerParams::heavy_ball(1.0, Some(1.0), t_end)?.with_dt(1e-3),
        &[1.0],
        None,
    )?;
    let x_flow = flow.final_x()[0];
    let exact = (1.0 + t_end) * (-t_end).exp();
    if (x_flow - exact).abs() > 1e-9 {
        return Ok((
            false,
            format!("flow reference off by {:.3e}", (x_flow - exact).abs()),
        ));
    }

    let mut points = Vec::new();
    for eta in [1e-2_f64, 1e-3, 1e-4] {
        let h = eta.sqrt();
        let steps = (t_end / h).ceil() as usize + 1;
        let params = OptimizerParams::nag(1.0, eta)?.with_steps(steps);
        let rec = run_discrete(&f, &NoiseModel::zero(), &params, &[1.0], None)?;
        let its = rec.iterates().expect("discrete");
        let k = its.partition_point(|s| s.t <= t_end) - 1;
        let (a, b) = (&its[k], &its[k + 1]);
        let w = (t_end - a.t) / (b.t - a.t);
        let x = (1.0 - w) * a.x[0] + w * b.x[0];
        points.push((h, (x - x_flow).abs()));
    }
    let slopes: Vec<f64> = points
        .windows(2)
        .map(|p| (p[0].1.ln() - p[1].1.ln()) / (p[0].0.ln() - p[1].0.ln()))
        .collect();
    let errs: Vec<String> = points.iter().map(|(_, e)| format!("{e:.3e}")).collect();
    Ok((
        slopes.iter().all(|&s| s >= 0.9),
        format!(
            "errors {} at eta 1e-2,1e-3,1e-4; slopes vs sqrt(eta) {slopes:.3?}",
            errs.join(", ")
        ),
    ))
}

fn line_probe_check() -> Check {
    let (e, r) = (0.1_f64, 2.0_f64);
    let f = quad("oscillatory1d{0.1,2}");
    let w = [0.5];
    let grid: Vec<f64> = (0..41).map(|i| -0.2 + 0.01 * i as f64).collect();
    let second = |x: f64| {
        let xi = 2.0 * r * x.abs().ln();
        1.0 + e * (1.0 - 2.0 * r * r) * xi.sin() + 3.0 * r * e * xi.cos()
    };
    let max_err = |h: f64| -> Result<f64, Box<dyn std::error::Error>> {
        let rows = line_probe(&f, &w, &[1.0], &grid, h)?;
        Ok(rows
            .iter()
            .map(|row| (row.d2phi - second(w[0] + row.t)).abs())
            .fold(0.0, f64::max))
    };
    let (coarse, fine) = (max_err(1e-2)?, max_err(5e-3)?);
    let ratio = coarse / fine;
    Ok((
        (3.5..=4.5).contains(&ratio) && coarse <= 1e-2,
        format!("max |d2phi - f''| = {coarse:.3e} (h=1e-2), {fine:.3e} (h=5e-3), ratio {ratio:.2}"),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (
            "AC1",
            "discrete certificate on the degenerate quadratic",
            1.0,
            ac1,
        ),
        ("AC2", "heavy-ball flow matches the closed form", 1.0, ac2),
        ("AC3", "additive-noise floor", 10.0, ac3),
        ("AC4", "AGNES under multiplicative noise", 30.0, ac4),
        ("AC5", "decreasing step sizes", 30.0, ac5),
        ("AC6", "oscillatory constants table", 5.0, ac6),
        ("AC7", "ellipse quartic limit points", 2.0, ac7),
        ("AC8", "GD not worse than NAG at eps = 0.085", 2.0, ac8),
        (
            "AC9",
            "projection monotonicity along tube splines",
            5.0,
            ac9,
        ),
        ("AC10", "NAG converges to the flow", 5.0, ac10),
        (
            "PROBE",
            "line-probe second differences are O(h^2)",
            1.0,
            line_probe_check,
        ),
    ];
    let mut failures = 0;
    for (tag, name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs_f64(budget);
        let (pass, detail) = match result {
            Ok((pass, detail)) => (pass && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!(
            "[{}] {tag} {name}: {detail} ({:.2} s, budget {budget} s{})",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", OVER BUDGET" },
        );
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
