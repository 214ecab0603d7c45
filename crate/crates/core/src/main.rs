use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use trimer_core::cli_io::{
    builtin_names, builtin_pipeline, builtin_scenario, export_optimization, export_stability,
    export_sweep, resolve_scenario, run_pipeline, Pipeline, Scenario,
};
use trimer_core::integrator::integrate;
use trimer_core::stability::{stability_scan, ScanSource, StabilityOptions};
use trimer_core::sweep_opt::{
    optimize_ratio_schedule, scan_ratio, OptimizerConfig, ScheduleFamily, SweepSpec,
};
use trimer_core::{Error, Result};

/// Atom–trimer conversion simulator.
#[derive(Parser)]
#[command(name = "trimer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Built-in scenario name or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Relative tolerance override (absolute tolerance follows at 1e-2·rel).
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Sampling stride override.
    #[arg(long)]
    stride: Option<f64>,
    /// Random seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario: built-ins use their registered pipeline, files are
    /// integrated.
    Run(Common),
    /// Sweep the scenario's grid (default: R in {1, 1.5, 2, 2.5, 3}).
    Scan(Common),
    /// Stability scan along the dark-state curve or the integrated trajectory.
    Stability {
        #[command(flatten)]
        common: Common,
        /// Linearize around the integrated trajectory instead.
        #[arg(long)]
        trajectory: bool,
        #[arg(long, default_value_t = trimer_core::stability::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Evolutionary search for the ratio schedule R(t).
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Family::Constant)]
        family: Family,
        /// Number of knots for the piecewise-linear family.
        #[arg(long, default_value_t = 5)]
        knots: usize,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 10)]
        offspring: usize,
    },
    /// Built-in scenarios.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    /// List registered scenario names.
    List,
    /// Print a built-in scenario document.
    Show { name: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Constant,
    Piecewise,
}

fn prepare(common: &Common) -> Result<Scenario> {
    let mut s = resolve_scenario(&common.scenario)?;
    if let Some(rel) = common.rel_tol {
        s.integrator = s.integrator.with_tolerances(rel, 1e-2 * rel);
    }
    if let Some(stride) = common.stride {
        s.integrator.sample_stride = stride;
    }
    if let Some(seed) = common.seed {
        s.seed = Some(seed);
    }
    s.validate()?;
    Ok(s)
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn csv_path(out: &Path, scenario: &Scenario, suffix: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    Ok(out.join(format!("{}_{suffix}.csv", scenario.name)))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let s = prepare(&common)?;
            let pipeline = builtin_pipeline(&common.scenario).unwrap_or(if s.sweep.is_some() {
                Pipeline::Sweep
            } else {
                Pipeline::Trajectory {
                    companion_deltas: vec![],
                }
            });
            report(&run_pipeline(&s, &pipeline, &common.out)?);
        }
        Command::Scan(common) => {
            let s = prepare(&common)?;
            let spec = s
                .sweep
                .clone()
                .unwrap_or_else(|| SweepSpec::ratios(vec![1.0, 1.5, 2.0, 2.5, 3.0]));
            let table = scan_ratio(&s, &spec)?;
            let path = csv_path(&common.out, &s, "scan")?;
            export_sweep(&table, &s, &path)?;
            report(&[path]);
        }
        Command::Stability {
            common,
            trajectory,
            threshold,
        } => {
            let s = prepare(&common)?;
            let options = StabilityOptions {
                threshold,
                ..Default::default()
            };
            let traj;
            let source = if trajectory {
                traj = integrate(&s.params, &s.initial, s.window, &s.integrator)?;
                ScanSource::Trajectory(&traj)
            } else {
                ScanSource::CptCurve {
                    window: s.window,
                    stride: s.integrator.sample_stride,
                }
            };
            let rep = stability_scan(source, &s.params, &options)?;
            let path = csv_path(&common.out, &s, "stability")?;
            export_stability(&rep, &s, &path)?;
            println!(
                "{} of {} samples unstable (max Re mu = {:e})",
                rep.unstable_count(),
                rep.samples.len(),
                rep.max_real_part()
            );
            report(&[path]);
        }
        Command::Optimize {
            common,
            family,
            knots,
            budget,
            offspring,
        } => {
            let s = prepare(&common)?;
            let seeds = vec![1.0, 1.5, 2.0, 2.5, 3.0];
            let family = match family {
                Family::Constant => ScheduleFamily::Constant { seeds },
                Family::Piecewise => {
                    if knots < 2 {
                        return Err(Error::Validation("--knots ≥ 2".into()));
                    }
                    let (t0, t1) = s.window;
                    let knot_times = (0..knots)
                        .map(|k| t0 + (t1 - t0) * k as f64 / (knots - 1) as f64)
                        .collect();
                    ScheduleFamily::PiecewiseLinear { knot_times, seeds }
                }
            };
            let config = OptimizerConfig {
                budget,
                offspring,
                seed: s.seed.unwrap_or(OptimizerConfig::default().seed),
                ..Default::default()
            };
            let result = optimize_ratio_schedule(&s, &family, &config)?;
            let path = csv_path(&common.out, &s, "optimize")?;
            export_optimization(
                &result,
                &s,
                json!({ "family": family, "config": config }),
                &path,
            )?;
            println!(
                "best objective {:.10} after {} evaluations",
                result.best_objective, result.evaluations
            );
            report(&[path]);
        }
        Command::Scenario { action } => match action {
            ScenarioAction::List => {
                for name in builtin_names() {
                    println!("{name}");
                }
            }
            ScenarioAction::Show { name } => println!("{}", builtin_scenario(&name)?.to_json()),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
