//! CSV emission. Column order is part of the public contract (pinned by a
//! golden-file test); floats are written with Rust's shortest round-trip
//! formatting and all files are written single-threaded, so identical inputs
//! produce byte-identical files.

use crate::error::Result;
use crate::estimator::{NetworkState, SensorSolve};
use crate::metrics::{RunRecord, RunRow};
use std::path::Path;

use super::runner::{CompareRow, ExcitationRow, SummaryRow};

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn write_rows(path: &Path, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn per_sensor(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

pub fn run_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "regret", "r", "lambda_window_min", "coop_ratio"]
        .map(String::from)
        .to_vec();
    h.extend(per_sensor("ls_err", n));
    h.extend(per_sensor("sparse_err", n));
    h.extend(per_sensor("zero_ok", n));
    h.extend(per_sensor("bound_ratio", n));
    h
}

fn run_row(row: &RunRow) -> Vec<String> {
    let mut out = vec![
        row.t.to_string(),
        fmt(row.regret),
        fmt(row.r),
        fmt(row.lambda_window_min),
        fmt(row.coop_ratio),
    ];
    out.extend(row.ls_err.iter().map(|&v| fmt(v)));
    out.extend(row.sparse_err.iter().map(|&v| fmt(v)));
    out.extend(row.zero_ok.iter().map(|&b| if b { "1" } else { "0" }.to_string()));
    out.extend(row.bound_ratio.iter().map(|&v| fmt(v)));
    out
}

pub fn write_run_csv(path: &Path, record: &RunRecord, n: usize) -> Result<()> {
    write_rows(
        path,
        run_header(n),
        record.rows.iter().map(run_row).collect(),
    )
}

pub fn summary_header() -> Vec<String> {
    [
        "t",
        "ls_err_mean",
        "ls_err_std",
        "sparse_err_mean",
        "sparse_err_std",
        "regret_mean",
        "regret_std",
        "coop_ratio_mean",
        "zero_agree_frac",
        "t0_count",
    ]
    .map(String::from)
    .to_vec()
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let body = rows
        .iter()
        .map(|s| {
            vec![
                s.t.to_string(),
                fmt(s.ls_err_mean),
                fmt(s.ls_err_std),
                fmt(s.sparse_err_mean),
                fmt(s.sparse_err_std),
                fmt(s.regret_mean),
                fmt(s.regret_std),
                fmt(s.coop_ratio_mean),
                fmt(s.zero_agree_frac),
                s.t0_count.to_string(),
            ]
        })
        .collect();
    write_rows(path, summary_header(), body)
}

pub fn compare_header() -> Vec<String> {
    ["t", "distributed_err", "non_cooperative_err"]
        .map(String::from)
        .to_vec()
}

pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> Result<()> {
    let body = rows
        .iter()
        .map(|c| {
            vec![
                c.t.to_string(),
                fmt(c.distributed_err),
                fmt(c.non_cooperative_err),
            ]
        })
        .collect();
    write_rows(path, compare_header(), body)
}

pub fn excitation_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "r", "lambda_window_min", "coop_ratio", "phi_p_phi_max"]
        .map(String::from)
        .to_vec();
    h.extend(per_sensor("solo_lambda_min", n));
    h
}

pub fn write_excitation_csv(path: &Path, rows: &[ExcitationRow], n: usize) -> Result<()> {
    let body = rows
        .iter()
        .map(|e| {
            let mut out = vec![
                e.t.to_string(),
                fmt(e.r),
                fmt(e.lambda_window_min),
                fmt(e.coop_ratio),
                fmt(e.phi_p_phi_max),
            ];
            out.extend(e.solo_lambda_min.iter().map(|&v| fmt(v)));
            out
        })
        .collect();
    write_rows(path, excitation_header(n), body)
}

/// Estimator state snapshot: one row per sensor.
pub fn write_state_csv(path: &Path, net: &NetworkState) -> Result<()> {
    let m = net.m();
    let mut header = vec!["t".to_string(), "i".to_string()];
    header.extend((1..=m).map(|l| format!("theta_ls_{l}")));
    header.extend((1..=m).map(|l| format!("xi_{l}")));
    header.extend(["alpha", "lambda_min", "lambda_max"].map(String::from));
    let body = net
        .sensors
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut out = vec![net.t.to_string(), (i + 1).to_string()];
            out.extend(s.theta_ls.iter().map(|&v| fmt(v)));
            out.extend(s.xi.iter().map(|&v| fmt(v)));
            out.push(fmt(s.alpha));
            out.push(fmt(s.lambda_min));
            out.push(fmt(s.lambda_max));
            out
        })
        .collect();
    write_rows(path, header, body)
}

/// Debug dump of each sensor's solved subproblem per round: Psi row-major,
/// q, gamma, the minimizer, and its stationarity residual.
pub fn write_solver_dump_csv(path: &Path, trace: &[(usize, SensorSolve)], m: usize) -> Result<()> {
    let mut header = vec!["t".to_string(), "i".to_string()];
    for r in 1..=m {
        for c in 1..=m {
            header.push(format!("psi_{r}{c}"));
        }
    }
    header.extend((1..=m).map(|l| format!("q_{l}")));
    header.extend((1..=m).map(|l| format!("gamma_{l}")));
    header.extend((1..=m).map(|l| format!("beta_{l}")));
    header.push("kkt".to_string());
    let body = trace
        .iter()
        .map(|(t, solve)| {
            let mut out = vec![t.to_string(), (solve.sensor + 1).to_string()];
            for r in 0..m {
                for c in 0..m {
                    out.push(fmt(solve.problem.psi[(r, c)]));
                }
            }
            out.extend(solve.problem.q.iter().map(|&v| fmt(v)));
            out.extend(solve.problem.gamma.iter().map(|&v| fmt(v)));
            out.extend(solve.report.beta.iter().map(|&v| fmt(v)));
            out.push(fmt(solve.report.kkt_residual));
            out
        })
        .collect();
    write_rows(path, header, body)
}
