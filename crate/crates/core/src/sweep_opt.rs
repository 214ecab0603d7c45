//! Sweeps over the channel ratio R and the Feshbach detuning δ, and an
//! evolutionary search for time-dependent ratio schedules R(t).
//!
//! A ratio schedule is realized by keeping the first photoassociation pulse
//! Ω₁(t) fixed and driving the second one as Ω₂(t) = (λ₂/λ₁)·Ω₁(t)/R(t), so
//! that η₂/η₁ = R(t) at every instant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli_io::Scenario;
use crate::cpt;
use crate::error::{Error, Result};
use crate::integrator::{integrate, Trajectory};
use crate::model::{Channel, ModelParams, PulseSchedule, RatioSchedule, Species};
use crate::stability::{stability_scan, ScanSource, StabilityOptions};

/// Smallest ratio a mutation may produce.
pub const MIN_RATIO: f64 = 1e-3;
/// Relative width of the Gaussian knot mutation.
pub const MUTATION_SCALE: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// N_g at the end of the window.
    #[default]
    FinalTrimer,
    /// Largest N_g over the window.
    PeakTrimer,
    /// Minus the RMS deviation of N_g(t) from the instantaneous dark state.
    CptTrackingError,
}

impl Objective {
    /// Score to maximize.
    pub fn score(self, params: &ModelParams, traj: &Trajectory) -> Result<f64> {
        match self {
            Objective::FinalTrimer => Ok(traj.final_population(Species::Trimer)),
            Objective::PeakTrimer => Ok(traj.peak_population(Species::Trimer)),
            Objective::CptTrackingError => Ok(-tracking_error(params, traj)?),
        }
    }
}

/// RMS of `N_g(t) − N_g^dark(t)` over the trajectory samples.
pub fn tracking_error(params: &ModelParams, traj: &Trajectory) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::Validation("trajectory is empty".into()));
    }
    let mut sum = 0.0;
    for s in &traj.samples {
        let dark = cpt::dark_state_at(params, s.t)?;
        sum += (s.population(Species::Trimer) - dark.n_g).powi(2);
    }
    Ok((sum / traj.len() as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepGrid {
    Ratio(Vec<f64>),
    Delta(Vec<f64>),
    /// Full tensor grid, ratios varying slowest.
    Both {
        ratios: Vec<f64>,
        deltas: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub grid: SweepGrid,
    #[serde(default)]
    pub objective: Objective,
}

impl SweepSpec {
    pub fn ratios(values: Vec<f64>) -> Self {
        SweepSpec {
            grid: SweepGrid::Ratio(values),
            objective: Objective::FinalTrimer,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_ratios = |rs: &[f64]| -> Result<()> {
            if let Some(r) = rs.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
                return Err(Error::Validation(format!(
                    "ratio grid values R > 0 (got {r}); no dark state exists for R < 0"
                )));
            }
            Ok(())
        };
        let check_deltas = |ds: &[f64]| -> Result<()> {
            if ds.iter().any(|d| !d.is_finite()) {
                return Err(Error::Validation("delta grid values must be finite".into()));
            }
            Ok(())
        };
        match &self.grid {
            SweepGrid::Ratio(rs) => check_ratios(rs)?,
            SweepGrid::Delta(ds) => check_deltas(ds)?,
            SweepGrid::Both { ratios, deltas } => {
                check_ratios(ratios)?;
                check_deltas(deltas)?;
            }
        }
        if self.points().is_empty() {
            return Err(Error::Validation("sweep grid must be non-empty".into()));
        }
        Ok(())
    }

    pub fn sweeps_ratio(&self) -> bool {
        !matches!(self.grid, SweepGrid::Delta(_))
    }

    /// Grid points in row order as `(R, δ)` overrides.
    pub fn points(&self) -> Vec<(Option<f64>, Option<f64>)> {
        match &self.grid {
            SweepGrid::Ratio(rs) => rs.iter().map(|&r| (Some(r), None)).collect(),
            SweepGrid::Delta(ds) => ds.iter().map(|&d| (None, Some(d))).collect(),
            SweepGrid::Both { ratios, deltas } => ratios
                .iter()
                .flat_map(|&r| deltas.iter().map(move |&d| (Some(r), Some(d))))
                .collect(),
        }
    }
}

/// Copy of `base` with Ω₂ driven by `ratio` relative to Ω₁.
pub fn with_ratio_schedule(base: &Scenario, ratio: RatioSchedule) -> Result<Scenario> {
    if base.params.channel != Channel::Dual {
        return Err(Error::Configuration(format!(
            "ratio sweeps need both channels (scenario '{}' uses {:?})",
            base.name, base.params.channel
        )));
    }
    ratio.validate()?;
    let mut s = base.clone();
    let p = &mut s.params;
    p.omega2 = PulseSchedule::RatioDriven {
        base: Box::new(p.omega1.clone()),
        coupling_ratio: p.lambda2 / p.lambda1,
        ratio,
    };
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub samples: usize,
    pub unstable_samples: usize,
    pub max_real_part: f64,
}

/// One grid point of a sweep. Failed points carry `error` and no metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ratio: Option<f64>,
    pub delta: f64,
    pub final_trimer: Option<f64>,
    pub peak_trimer: Option<f64>,
    pub tracking_error: Option<f64>,
    pub objective: Option<f64>,
    pub stability: Option<StabilitySummary>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub objective: Objective,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Row with the largest objective among successful points.
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.objective.is_some())
            .max_by(|a, b| a.objective.unwrap().total_cmp(&b.objective.unwrap()))
    }
}

fn evaluate_point(scenario: &Scenario, objective: Objective) -> Result<(Trajectory, f64)> {
    let traj = integrate(
        &scenario.params,
        &scenario.initial,
        scenario.window,
        &scenario.integrator,
    )?;
    let score = objective.score(&scenario.params, &traj)?;
    Ok((traj, score))
}

fn sweep_row(base: &Scenario, point: (Option<f64>, Option<f64>), objective: Objective) -> SweepRow {
    let (ratio, delta) = point;
    let mut row = SweepRow {
        ratio,
        delta: delta.unwrap_or(base.params.delta),
        final_trimer: None,
        peak_trimer: None,
        tracking_error: None,
        objective: None,
        stability: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let mut scenario = match ratio {
            Some(r) => with_ratio_schedule(base, RatioSchedule::Constant(r))?,
            None => base.clone(),
        };
        scenario.params.delta = row.delta;
        let (traj, score) = evaluate_point(&scenario, objective)?;
        row.final_trimer = Some(traj.final_population(Species::Trimer));
        row.peak_trimer = Some(traj.peak_population(Species::Trimer));
        row.tracking_error = Some(tracking_error(&scenario.params, &traj)?);
        row.objective = Some(score);
        let report = stability_scan(
            ScanSource::CptCurve {
                window: scenario.window,
                stride: scenario.integrator.sample_stride,
            },
            &scenario.params,
            &StabilityOptions::default(),
        )?;
        row.stability = Some(StabilitySummary {
            samples: report.samples.len(),
            unstable_samples: report.unstable_count(),
            max_real_part: report.max_real_part(),
        });
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// Integrates `base` at every grid point of `spec`. Rows follow grid order;
/// a failing point is recorded in its row and does not stop the sweep.
pub fn scan_ratio(base: &Scenario, spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    if spec.sweeps_ratio() && base.params.channel != Channel::Dual {
        return Err(Error::Configuration(
            "ratio sweeps need a dual-channel scenario".into(),
        ));
    }
    let rows = spec
        .points()
        .into_par_iter()
        .map(|point| sweep_row(base, point, spec.objective))
        .collect();
    Ok(SweepTable {
        objective: spec.objective,
        rows,
    })
}

/// Search space for [`optimize_ratio_schedule`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleFamily {
    /// Time-independent R; one candidate per seed value.
    Constant { seeds: Vec<f64> },
    /// Piecewise-linear R(t) on fixed knot times. Each seed value starts a
    /// flat (constant-R) candidate.
    PiecewiseLinear {
        knot_times: Vec<f64>,
        seeds: Vec<f64>,
    },
    /// A single schedule, evaluated as given.
    Fixed(RatioSchedule),
}

impl ScheduleFamily {
    fn knots(&self) -> usize {
        match self {
            ScheduleFamily::Constant { .. } => 1,
            ScheduleFamily::PiecewiseLinear { knot_times, .. } => knot_times.len(),
            ScheduleFamily::Fixed(r) => r.values().len(),
        }
    }

    fn initial_population(&self) -> Vec<Vec<f64>> {
        match self {
            ScheduleFamily::Constant { seeds } => seeds.iter().map(|&r| vec![r]).collect(),
            ScheduleFamily::PiecewiseLinear { knot_times, seeds } => {
                seeds.iter().map(|&r| vec![r; knot_times.len()]).collect()
            }
            ScheduleFamily::Fixed(r) => vec![r.values()],
        }
    }

    fn schedule(&self, values: &[f64]) -> RatioSchedule {
        match self {
            ScheduleFamily::Constant { .. } => RatioSchedule::Constant(values[0]),
            ScheduleFamily::PiecewiseLinear { knot_times, .. } => RatioSchedule::PiecewiseLinear(
                knot_times
                    .iter()
                    .copied()
                    .zip(values.iter().copied())
                    .collect(),
            ),
            ScheduleFamily::Fixed(r) => r.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let seeds = match self {
            ScheduleFamily::Constant { seeds } => seeds,
            ScheduleFamily::PiecewiseLinear { knot_times, seeds } => {
                if knot_times.is_empty() || knot_times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Validation(
                        "knot times must be non-empty and strictly increasing".into(),
                    ));
                }
                seeds
            }
            ScheduleFamily::Fixed(r) => return r.validate(),
        };
        if seeds.is_empty() {
            return Err(Error::Validation(
                "at least one seed ratio is required".into(),
            ));
        }
        if let Some(r) = seeds.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::Validation(format!("seed ratios R > 0 (got {r})")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub objective: Objective,
    /// Maximum number of objective evaluations.
    pub budget: usize,
    /// Offspring per generation; the parent count is the seed count.
    pub offspring: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            objective: Objective::FinalTrimer,
            budget: 200,
            offspring: 10,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best: RatioSchedule,
    pub best_objective: f64,
    /// Best objective so far after each generation (index 0: seeds).
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub failures: usize,
}

#[derive(Clone)]
struct Candidate {
    values: Vec<f64>,
    score: Option<f64>,
}

fn evaluate_all(
    base: &Scenario,
    family: &ScheduleFamily,
    objective: Objective,
    values: Vec<Vec<f64>>,
    diagnostics: &mut Vec<String>,
) -> Vec<Candidate> {
    let results: Vec<Result<f64>> = values
        .par_iter()
        .map(|v| {
            let scenario = with_ratio_schedule(base, family.schedule(v))?;
            evaluate_point(&scenario, objective).map(|(_, s)| s)
        })
        .collect();
    values
        .into_iter()
        .zip(results)
        .map(|(values, r)| match r {
            Ok(score) => Candidate {
                values,
                score: Some(score),
            },
            Err(e) => {
                diagnostics.push(format!("R = {values:?}: {e}"));
                Candidate {
                    values,
                    score: None,
                }
            }
        })
        .collect()
}

fn rank(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    let key = |c: &Candidate| c.score.unwrap_or(f64::NEG_INFINITY);
    key(b).total_cmp(&key(a))
}

/// (μ+λ) evolution strategy over the knot values of `family`, maximizing
/// `config.objective`. The μ parents are the family's seeds; each offspring
/// copies a random parent and perturbs every knot by a Gaussian of width
/// [`MUTATION_SCALE`]·R. Candidates are scored concurrently; all random draws
/// happen on one seeded stream, so results depend only on the inputs.
pub fn optimize_ratio_schedule(
    base: &Scenario,
    family: &ScheduleFamily,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    family.validate()?;
    let mut parents = family.initial_population();
    let mu = parents.len();
    if config.budget < mu {
        return Err(Error::Validation(format!(
            "budget ≥ population size (got {} < {mu})",
            config.budget
        )));
    }
    if config.offspring == 0 {
        return Err(Error::Validation("offspring count ≥ 1".into()));
    }
    let fixed = matches!(family, ScheduleFamily::Fixed(_));
    debug_assert!(parents.iter().all(|p| p.len() == family.knots()));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut diagnostics = Vec::new();
    let mut population = evaluate_all(
        base,
        family,
        config.objective,
        std::mem::take(&mut parents),
        &mut diagnostics,
    );
    let mut evaluations = population.len();
    population.sort_by(rank);
    let mut trace = vec![population[0].score.unwrap_or(f64::NEG_INFINITY)];

    while !fixed && evaluations < config.budget {
        let count = config.offspring.min(config.budget - evaluations);
        let children: Vec<Vec<f64>> = (0..count)
            .map(|_| {
                let parent = &population[rng.random_range(0..population.len())];
                parent
                    .values
                    .iter()
                    .map(|&r| {
                        let z: f64 = unit.sample(&mut rng);
                        (r + MUTATION_SCALE * r * z).max(MIN_RATIO)
                    })
                    .collect()
            })
            .collect();
        evaluations += children.len();
        population.extend(evaluate_all(
            base,
            family,
            config.objective,
            children,
            &mut diagnostics,
        ));
        population.sort_by(rank);
        population.truncate(mu);
        trace.push(population[0].score.unwrap_or(f64::NEG_INFINITY));
    }

    let best = &population[0];
    match best.score {
        Some(score) => Ok(OptimizationResult {
            best: family.schedule(&best.values),
            best_objective: score,
            trace,
            evaluations,
            failures: diagnostics.len(),
        }),
        None => Err(Error::OptimizationFailed(format!(
            "all {evaluations} candidates failed; first errors: {}",
            diagnostics
                .iter()
                .take(3)
                .cloned()
                .collect::<Vec<_>>()
                .join("; ")
        ))),
    }
}
