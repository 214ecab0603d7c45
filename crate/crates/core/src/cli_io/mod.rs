//! Scenario documents, the built-in scenario registry and the pipelines the
//! command-line tool runs on them.
//!
//! A scenario is a JSON object:
//!
//! ```json
//! {
//!   "name": "fig1a",
//!   "description": "optional",
//!   "params": { "channel": "aa_only", "delta": -3.0 },
//!   "initial": { "a": [0.816, 0.0], "b": [0.577, 0.0] },
//!   "window": [0.0, 200.0],
//!   "integrator": { "rel_tol": 1e-10, "sample_stride": 0.5 },
//!   "sweep": { "grid": { "ratio": [1.0, 2.0] }, "objective": "final_trimer" },
//!   "seed": 42
//! }
//! ```
//!
//! Everything except `name` and `params.channel`/`params.delta` has a
//! default; unknown keys are rejected.

mod export;

pub use export::{
    export_cpt_curve, export_optimization, export_stability, export_sweep, export_timeseries,
    read_timeseries, sidecar_path, TIMESERIES_COLUMNS,
};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cpt::cpt_reference_curve;
use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorConfig};
use crate::model::{ModelParams, StateVector};
use crate::stability::{stability_scan, ScanSource, StabilityOptions};
use crate::sweep_opt::{scan_ratio, SweepSpec};

/// Default time window, ten pulse widths.
pub const DEFAULT_WINDOW: (f64, f64) = (0.0, 200.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub params: ModelParams,
    #[serde(default = "StateVector::stoichiometric")]
    pub initial: StateVector,
    #[serde(default = "default_window")]
    pub window: (f64, f64),
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_window() -> (f64, f64) {
    DEFAULT_WINDOW
}

impl Scenario {
    pub fn new(name: impl Into<String>, params: ModelParams) -> Self {
        Scenario {
            name: name.into(),
            description: String::new(),
            params,
            initial: StateVector::stoichiometric(),
            window: DEFAULT_WINDOW,
            integrator: IntegratorConfig::default(),
            sweep: None,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (t0, t1) = self.window;
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(Error::Validation(format!(
                "window t0 < t1 (got [{t0}, {t1}])"
            )));
        }
        self.params.validate()?;
        let p = &self.params;
        for (active, pulse, label) in [
            (p.channel.uses_aa(), &p.omega1, "omega1"),
            (p.channel.uses_ab(), &p.omega2, "omega2"),
        ] {
            if active && !pulse.covers(t0, t1) {
                return Err(Error::Validation(format!(
                    "{label} must be defined on the whole window [{t0}, {t1}]"
                )));
            }
        }
        if !self.initial.is_finite() {
            return Err(Error::Validation(
                "initial amplitudes must be finite".into(),
            ));
        }
        self.integrator.validate()?;
        if let Some(sweep) = &self.sweep {
            sweep.validate()?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scenario.validate()?;
    Ok(scenario)
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

/// What `run_named_scenario` does with a scenario.
#[derive(Clone, Debug, PartialEq)]
pub enum Pipeline {
    /// Integrate, export the trajectory with its dark-state overlay and a
    /// stability scan; repeat at each extra δ.
    Trajectory { companion_deltas: Vec<f64> },
    /// Dark-state populations along the pulses, no integration.
    CptCurve,
    /// Parameter sweep from the scenario's `sweep` block.
    Sweep,
}

const BUILTINS: &[(&str, &str)] = &[
    ("fig1a", include_str!("../../scenarios/fig1a.json")),
    ("fig1b", include_str!("../../scenarios/fig1b.json")),
    ("fig3b_R1", include_str!("../../scenarios/fig3b_R1.json")),
    ("fig3c_R2", include_str!("../../scenarios/fig3c_R2.json")),
    ("cpt_curve", include_str!("../../scenarios/cpt_curve.json")),
    ("rscan", include_str!("../../scenarios/rscan.json")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

fn unknown(name: &str) -> Error {
    Error::UnknownScenario {
        name: name.to_string(),
        registered: builtin_names().join(", "),
    }
}

pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    let (_, text) = BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| unknown(name))?;
    parse_scenario(text)
}

pub fn builtin_pipeline(name: &str) -> Result<Pipeline> {
    Ok(match name {
        "fig1a" | "fig1b" => Pipeline::Trajectory {
            companion_deltas: vec![],
        },
        "fig3b_R1" | "fig3c_R2" => Pipeline::Trajectory {
            companion_deltas: vec![0.0],
        },
        "cpt_curve" => Pipeline::CptCurve,
        "rscan" => Pipeline::Sweep,
        _ => return Err(unknown(name)),
    })
}

/// Built-in name or path to a scenario file.
pub fn resolve_scenario(arg: &str) -> Result<Scenario> {
    if builtin_names().contains(&arg) {
        builtin_scenario(arg)
    } else if Path::new(arg).exists() {
        load_scenario(arg)
    } else {
        Err(unknown(arg))
    }
}

/// Runs `pipeline` on `scenario`, writing into `out_dir`. Returns the files
/// written.
pub fn run_pipeline(
    scenario: &Scenario,
    pipeline: &Pipeline,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    scenario.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let stride = scenario.integrator.sample_stride;
    match pipeline {
        Pipeline::Trajectory { companion_deltas } => {
            let variants = std::iter::once((scenario.clone(), String::new())).chain(
                companion_deltas.iter().map(|&d| {
                    let mut s = scenario.clone();
                    s.params.delta = d;
                    (s, format!("_delta{d}"))
                }),
            );
            for (s, suffix) in variants {
                let traj = integrate(&s.params, &s.initial, s.window, &s.integrator)?;
                let path = out_dir.join(format!("{}{suffix}_trajectory.csv", s.name));
                export_timeseries(&traj, &s, &path)?;
                files.push(path.clone());
                files.push(sidecar_path(&path));

                let curve = cpt_reference_curve(&s.params, s.window, stride)?;
                let path = out_dir.join(format!("{}{suffix}_cpt.csv", s.name));
                export_cpt_curve(&curve, &s, &path)?;
                files.push(sidecar_path(&path));
                files.push(path);

                let report = stability_scan(
                    ScanSource::CptCurve {
                        window: s.window,
                        stride,
                    },
                    &s.params,
                    &StabilityOptions::default(),
                )?;
                let path = out_dir.join(format!("{}{suffix}_stability.csv", s.name));
                export_stability(&report, &s, &path)?;
                files.push(sidecar_path(&path));
                files.push(path);
            }
        }
        Pipeline::CptCurve => {
            let curve = cpt_reference_curve(&scenario.params, scenario.window, stride)?;
            let path = out_dir.join(format!("{}.csv", scenario.name));
            export_cpt_curve(&curve, scenario, &path)?;
            files.push(sidecar_path(&path));
            files.push(path);
        }
        Pipeline::Sweep => {
            let spec = scenario.sweep.as_ref().ok_or_else(|| {
                Error::Validation(format!("scenario '{}' has no sweep block", scenario.name))
            })?;
            let table = scan_ratio(scenario, spec)?;
            let path = out_dir.join(format!("{}.csv", scenario.name));
            export_sweep(&table, scenario, &path)?;
            files.push(path.clone());
            files.push(sidecar_path(&path));
        }
    }
    Ok(files)
}

/// Runs one of the registered scenarios into `out_dir`.
pub fn run_named_scenario(name: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let pipeline = builtin_pipeline(name)?;
    run_pipeline(&builtin_scenario(name)?, &pipeline, out_dir)
}
