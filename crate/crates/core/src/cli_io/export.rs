//! CSV writers. Floating-point cells use `{:.16e}` (17 significant digits),
//! which parses back to the identical double.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::Scenario;
use crate::cpt::CptSample;
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::stability::{Classification, StabilityReport};
use crate::sweep_opt::{OptimizationResult, SweepTable};

pub const TIMESERIES_COLUMNS: [&str; 20] = [
    "t",
    "N_a",
    "N_b",
    "N_d1",
    "N_d2",
    "N_g",
    "Re_psi_a",
    "Im_psi_a",
    "Re_psi_b",
    "Im_psi_b",
    "Re_psi_d1",
    "Im_psi_d1",
    "Re_psi_d2",
    "Im_psi_d2",
    "Re_psi_g",
    "Im_psi_g",
    "Omega1",
    "Omega2",
    "Delta",
    "conserved",
];

fn num(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("write to string");
}

fn row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        num(out, *v);
    }
    out.push('\n');
}

fn opt(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        num(out, v);
    }
}

/// `results.csv` → `results.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn write_sidecar(csv: &Path, value: serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(&value).expect("json value serializes");
    fs::write(sidecar_path(csv), text + "\n")?;
    Ok(())
}

/// Writes the sampled trajectory as CSV plus a JSON sidecar holding the
/// scenario and run statistics.
pub fn export_timeseries(traj: &Trajectory, scenario: &Scenario, path: &Path) -> Result<()> {
    if traj.is_empty() {
        return Err(Error::Validation(
            "cannot export an empty trajectory".into(),
        ));
    }
    let mut out = TIMESERIES_COLUMNS.join(",");
    out.push('\n');
    for s in &traj.samples {
        let mut values = Vec::with_capacity(TIMESERIES_COLUMNS.len());
        values.push(s.t);
        values.extend_from_slice(&s.populations);
        for z in s.state.psi {
            values.push(z.re);
            values.push(z.im);
        }
        values.extend([
            s.controls.omega1,
            s.controls.omega2,
            s.controls.detuning,
            s.conserved,
        ]);
        row(&mut out, &values);
    }
    fs::write(path, out)?;
    write_sidecar(
        path,
        json!({
            "scenario": scenario,
            "columns": TIMESERIES_COLUMNS,
            "samples": traj.len(),
            "steps": {
                "accepted": traj.stats.accepted,
                "rejected": traj.stats.rejected,
                "rhs_evaluations": traj.stats.rhs_evaluations,
            },
            "version": env!("CARGO_PKG_VERSION"),
        }),
    )
}

/// Reads a file written by [`export_timeseries`] back into rows of doubles.
pub fn read_timeseries(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != TIMESERIES_COLUMNS.join(",") {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "unexpected time-series header".into(),
        });
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            line.split(',')
                .enumerate()
                .map(|(j, cell)| {
                    cell.parse::<f64>().map_err(|e| Error::Parse {
                        line: i + 2,
                        column: j + 1,
                        message: e.to_string(),
                    })
                })
                .collect()
        })
        .collect()
}

/// Dark-state populations and resonance detuning along the pulses.
pub fn export_cpt_curve(curve: &[CptSample], scenario: &Scenario, path: &Path) -> Result<()> {
    let mut out = String::from("t,eta1,eta2,N_a,N_b,N_g,Delta\n");
    for s in curve {
        let sol = &s.solution;
        row(
            &mut out,
            &[
                s.t,
                sol.eta1.value(),
                sol.eta2.value(),
                sol.n_a,
                sol.n_b,
                sol.n_g,
                s.detuning,
            ],
        );
    }
    fs::write(path, out)?;
    write_sidecar(
        path,
        json!({ "scenario": scenario, "samples": curve.len() }),
    )
}

/// Per-sample stability verdicts with the full spectrum.
pub fn export_stability(report: &StabilityReport, scenario: &Scenario, path: &Path) -> Result<()> {
    let m = report.samples.first().map_or(0, |s| s.eigenvalues.len());
    let mut out = String::from("t,max_real_part,unstable,frame_residual");
    for k in 0..m {
        write!(out, ",Re_mu{k},Im_mu{k}").expect("write to string");
    }
    out.push('\n');
    for s in &report.samples {
        num(&mut out, s.t);
        out.push(',');
        num(&mut out, s.max_real_part);
        out.push_str(if s.classification == Classification::Unstable {
            ",1,"
        } else {
            ",0,"
        });
        num(&mut out, s.frame_residual);
        for mu in &s.eigenvalues {
            out.push(',');
            num(&mut out, mu.re);
            out.push(',');
            num(&mut out, mu.im);
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    write_sidecar(
        path,
        json!({
            "scenario": scenario,
            "threshold": report.threshold,
            "unstable_samples": report.unstable_count(),
        }),
    )
}

/// One row per grid point; failed points leave metric cells empty and carry
/// the error message.
pub fn export_sweep(table: &SweepTable, scenario: &Scenario, path: &Path) -> Result<()> {
    let mut out = String::from(
        "R,delta,final_N_g,peak_N_g,tracking_error,objective,unstable_samples,max_real_part,error\n",
    );
    for r in &table.rows {
        opt(&mut out, r.ratio);
        out.push(',');
        num(&mut out, r.delta);
        for v in [r.final_trimer, r.peak_trimer, r.tracking_error, r.objective] {
            out.push(',');
            opt(&mut out, v);
        }
        out.push(',');
        if let Some(st) = &r.stability {
            write!(out, "{}", st.unstable_samples).expect("write to string");
            out.push(',');
            num(&mut out, st.max_real_part);
        } else {
            out.push(',');
        }
        out.push(',');
        if let Some(e) = &r.error {
            out.push('"');
            out.push_str(&e.replace('"', "\"\""));
            out.push('"');
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    write_sidecar(path, json!({ "scenario": scenario, "table": table }))
}

/// Objective trace as CSV, best schedule and settings in the sidecar.
pub fn export_optimization(
    result: &OptimizationResult,
    scenario: &Scenario,
    settings: serde_json::Value,
    path: &Path,
) -> Result<()> {
    let mut out = String::from("generation,best_objective\n");
    for (g, v) in result.trace.iter().enumerate() {
        write!(out, "{g},").expect("write to string");
        num(&mut out, *v);
        out.push('\n');
    }
    fs::write(path, out)?;
    write_sidecar(
        path,
        json!({ "scenario": scenario, "optimizer": settings, "result": result }),
    )
}
