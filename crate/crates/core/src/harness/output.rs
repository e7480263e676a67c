use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use super::HarnessError;
use crate::geometry::{GeometryReport, ProbeRow};
use crate::lyapunov::LyapunovTrace;
use crate::optimizers::TrajectoryRecord;

/// 17 significant digits, so values round-trip exactly.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_error(path: &Path, e: impl ToString) -> HarnessError {
    HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| io_error(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

/// RFC-4180 table.
pub fn csv_table<I>(header: &[String], rows: I) -> Result<Vec<u8>, HarnessError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Parse(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| HarnessError::Parse(e.to_string()))
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// `n,t,x...,v...,f,lyap`; `lyap` is empty when no functional applies.
/// Flow samples use their index as `n`.
pub fn trajectory_csv(
    record: &TrajectoryRecord,
    lyap: Option<&[f64]>,
) -> Result<Vec<u8>, HarnessError> {
    let states = record.states();
    let d = states.first().map_or(0, |s| s.1.len());
    let mut head = header(&["n", "t"]);
    head.extend((0..d).map(|i| format!("x{i}")));
    head.extend((0..d).map(|i| format!("v{i}")));
    head.extend(header(&["f", "lyap"]));
    let steps: Vec<usize> = match record.iterates() {
        Some(its) => its.iter().map(|s| s.n).collect(),
        None => (0..states.len()).collect(),
    };
    let rows = states.iter().enumerate().map(|(k, (t, x, v, f))| {
        let mut row = vec![steps[k].to_string(), num(*t)];
        row.extend(x.iter().map(|&a| num(a)));
        row.extend(v.iter().map(|&a| num(a)));
        row.push(num(*f));
        row.push(lyap.map_or_else(String::new, |l| num(l[k])));
        row
    });
    csv_table(&head, rows)
}

/// `n,lyap,ratio,target,pass`; `ratio` and `target` are empty on the first row.
pub fn lyapunov_csv(trace: &LyapunovTrace) -> Result<Vec<u8>, HarnessError> {
    let ratios = trace.ratios();
    let rows = (0..trace.values.len()).map(|k| {
        let opt = |v: f64| if v.is_finite() { num(v) } else { String::new() };
        vec![
            trace.steps[k].to_string(),
            num(trace.values[k]),
            opt(ratios[k]),
            opt(trace.contraction_target[k]),
            trace.pass[k].to_string(),
        ]
    });
    csv_table(&header(&["n", "lyap", "ratio", "target", "pass"]), rows)
}

/// One-row table of a geometry report.
pub fn geometry_csv(report: &GeometryReport) -> Result<Vec<u8>, HarnessError> {
    let head = header(&[
        "pl_constant_emp",
        "sc_wrt_min_emp",
        "quasar_gamma",
        "neg_eig_bound",
        "curvature_sup",
        "n_samples",
        "n_excluded",
        "sample_region",
    ]);
    let row = vec![
        num(report.pl_constant_emp),
        num(report.sc_wrt_min_emp),
        report.quasar_gamma.map_or_else(String::new, num),
        num(report.neg_eig_bound),
        num(report.curvature_sup),
        report.n_samples.to_string(),
        report.n_excluded.to_string(),
        report.sample_region.clone(),
    ];
    csv_table(&head, [row])
}

/// `t,phi,dphi,d2phi,mu_estimate`
pub fn probe_csv(rows: &[ProbeRow]) -> Result<Vec<u8>, HarnessError> {
    let head = header(&["t", "phi", "dphi", "d2phi", "mu_estimate"]);
    let rows = rows.iter().map(|r| {
        vec![
            num(r.t),
            num(r.phi),
            num(r.dphi),
            num(r.d2phi),
            r.mu_estimate.map_or_else(String::new, num),
        ]
    });
    csv_table(&head, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| HarnessError::Parse(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
