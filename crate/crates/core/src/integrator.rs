//! Adaptive Dormand–Prince 5(4) integration of the realified equations of
//! motion, with fourth-order dense output at a fixed sampling stride.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    conserved_atom_number, vector_field, Controls, ModelParams, Species, StateVector,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// First trial step; chosen automatically when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_step: Option<f64>,
    pub max_step: f64,
    /// Steps below this abort the run.
    pub min_step: f64,
    /// Output sampling interval.
    pub sample_stride: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            initial_step: None,
            max_step: 1.0,
            min_step: 1e-12,
            sample_stride: 0.5,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_stride(mut self, stride: f64) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} > 0 (got {v})")))
            }
        };
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        positive("min_step", self.min_step)?;
        positive("max_step", self.max_step)?;
        positive("sample_stride", self.sample_stride)?;
        if let Some(h) = self.initial_step {
            positive("initial_step", h)?;
        }
        if self.min_step >= self.max_step {
            return Err(Error::Validation(format!(
                "0 < min_step < max_step (got {} and {})",
                self.min_step, self.max_step
            )));
        }
        Ok(())
    }
}

/// One output point of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: StateVector,
    pub populations: [f64; 5],
    pub controls: Controls,
    pub conserved: f64,
}

impl Sample {
    fn new(t: f64, state: StateVector, controls: Controls) -> Self {
        Sample {
            t,
            populations: state.populations(),
            conserved: conserved_atom_number(&state),
            state,
            controls,
        }
    }

    pub fn population(&self, species: Species) -> f64 {
        self.populations[species.index()]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
}

/// Time-ordered samples of one integration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Population of `species` at every sample.
    pub fn series(&self, species: Species) -> Vec<f64> {
        self.samples.iter().map(|s| s.population(species)).collect()
    }

    pub fn final_population(&self, species: Species) -> f64 {
        self.last().map_or(f64::NAN, |s| s.population(species))
    }

    pub fn peak_population(&self, species: Species) -> f64 {
        self.samples
            .iter()
            .map(|s| s.population(species))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Sampling grid `t0, t0 + stride, …` closed by `t1`.
pub fn sample_times(t0: f64, t1: f64, stride: f64) -> Result<Vec<f64>> {
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(Error::Validation(format!(
            "window must satisfy t0 < t1 (got [{t0}, {t1}])"
        )));
    }
    if !(stride.is_finite() && stride > 0.0) {
        return Err(Error::Validation(format!(
            "sample stride > 0 (got {stride})"
        )));
    }
    let mut times = Vec::new();
    let mut k = 0u64;
    loop {
        let t = t0 + k as f64 * stride;
        if t >= t1 - 1e-9 * stride {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(t1);
    Ok(times)
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (the last row of `A`) minus the embedded
/// fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Design order of the propagating solution.
pub const METHOD_ORDER: u32 = 5;

struct System<'a> {
    params: &'a ModelParams,
    fields: &'static [Species],
    evaluations: usize,
}

impl System<'_> {
    fn eval(&mut self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.evaluations += 1;
        let state = StateVector::from_realified(y, self.fields);
        let controls = self.params.controls_at(t)?;
        let f = vector_field(&state, self.params, &controls);
        for (k, &s) in self.fields.iter().enumerate() {
            out[2 * k] = f[s].re;
            out[2 * k + 1] = f[s].im;
        }
        Ok(())
    }

    fn state(&self, y: &[f64]) -> StateVector {
        StateVector::from_realified(y, self.fields)
    }
}

/// Stage buffers for one Dormand–Prince step.
struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }

    /// Fills stages 2..7 given `k[0] = f(t, y)`; writes the fifth-order
    /// solution into `y_new` and the local error estimate into `err`.
    fn step(
        &mut self,
        sys: &mut System,
        t: f64,
        h: f64,
        y: &[f64],
        y_new: &mut [f64],
        err: &mut [f64],
    ) -> Result<()> {
        let n = y.len();
        for s in 1..7 {
            for (i, (ti, yi)) in self.tmp.iter_mut().zip(y).enumerate().take(n) {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[j][i];
                }
                *ti = yi + h * acc;
            }
            let (_, tail) = self.k.split_at_mut(s);
            sys.eval(t + C[s] * h, &self.tmp, &mut tail[0])?;
            if s == 6 {
                y_new.copy_from_slice(&self.tmp);
            }
        }
        for (i, ei) in err.iter_mut().enumerate().take(n) {
            let mut e = 0.0;
            for (s, coeff) in E.iter().enumerate() {
                e += coeff * self.k[s][i];
            }
            *ei = h * e;
        }
        Ok(())
    }
}

/// Dense-output weights of the fourth-order continuous extension.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Continuous extension of an accepted step from `(t0, y0)` to `y1` with
/// stages `k`; fourth-order accurate at any `t` in `[t0, t0 + h]`.
fn dense(t0: f64, h: f64, y0: &[f64], y1: &[f64], k: &[Vec<f64>; 7], t: f64) -> Vec<f64> {
    let th = (t - t0) / h;
    let th1 = 1.0 - th;
    (0..y0.len())
        .map(|i| {
            let r2 = y1[i] - y0[i];
            let r3 = h * k[0][i] - r2;
            let r4 = r2 - h * k[6][i] - r3;
            let r5 = h * D.iter().zip(k.iter()).map(|(d, ks)| d * ks[i]).sum::<f64>();
            y0[i] + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))
        })
        .collect()
}

fn initial_step(config: &IntegratorConfig, y: &[f64], f: &[f64], span: f64) -> f64 {
    if let Some(h) = config.initial_step {
        return h.min(span);
    }
    let scale = |v: &[f64]| {
        v.iter()
            .zip(y.iter())
            .map(|(x, yi)| (x / (config.abs_tol + config.rel_tol * yi.abs())).powi(2))
            .sum::<f64>()
            .sqrt()
            / (y.len() as f64).sqrt()
    };
    let d0 = scale(y);
    let d1 = scale(f);
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.clamp(config.min_step * 10.0, config.max_step).min(span)
}

/// Integrates `initial` over `window`, sampling every `config.sample_stride`.
///
/// Controls (and the tracking detuning) are re-evaluated at every stage.
/// A step-size underflow or a non-finite state ends the run with an error
/// that carries the samples produced so far.
pub fn integrate(
    params: &ModelParams,
    initial: &StateVector,
    window: (f64, f64),
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    initial.ensure_finite()?;
    let times = sample_times(window.0, window.1, config.sample_stride)?;
    let (t0, t1) = window;

    let fields = params.channel.active_fields();
    let mut sys = System {
        params,
        fields,
        evaluations: 0,
    };
    let n = 2 * fields.len();
    let mut y = initial.realify(fields);
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut stages = Stages::new(n);
    sys.eval(t0, &y, &mut stages.k[0])?;

    let mut traj = Trajectory::default();
    traj.samples
        .push(Sample::new(t0, sys.state(&y), params.controls_at(t0)?));
    let mut next_sample = 1;

    let mut t = t0;
    let mut h = initial_step(config, &y, &stages.k[0], t1 - t0);
    let mut last_rejected = false;

    while t < t1 {
        let remaining = t1 - t;
        let mut last_step = false;
        if h >= remaining || remaining - h < config.min_step {
            h = remaining;
            last_step = true;
        }

        stages.step(&mut sys, t, h, &y, &mut y_new, &mut err)?;
        let finite = y_new
            .iter()
            .chain(stages.k[6].iter())
            .all(|v| v.is_finite());
        let err_norm = if finite {
            err.iter()
                .zip(y.iter().zip(y_new.iter()))
                .map(|(e, (a, b))| {
                    e.abs() / (config.abs_tol + config.rel_tol * a.abs().max(b.abs()))
                })
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };

        if err_norm <= 1.0 {
            let t_new = if last_step { t1 } else { t + h };
            while next_sample < times.len() && times[next_sample] <= t_new {
                let ts = times[next_sample];
                let ys = if ts == t_new {
                    y_new.clone()
                } else {
                    dense(t, h, &y, &y_new, &stages.k, ts)
                };
                traj.samples
                    .push(Sample::new(ts, sys.state(&ys), params.controls_at(ts)?));
                next_sample += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            let (first, rest) = stages.k.split_at_mut(1);
            std::mem::swap(&mut first[0], &mut rest[5]);
            traj.stats.accepted += 1;

            let mut factor = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            if last_rejected {
                factor = factor.min(1.0);
            }
            last_rejected = false;
            h = (h * factor).min(config.max_step);
        } else {
            traj.stats.rejected += 1;
            last_rejected = true;
            let factor = if finite {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 0.9)
            } else {
                0.2
            };
            h *= factor;
            if h < config.min_step {
                traj.stats.rhs_evaluations = sys.evaluations;
                return Err(if finite {
                    Error::StepUnderflow {
                        t,
                        step: h,
                        partial: Box::new(traj),
                    }
                } else {
                    Error::Divergence {
                        last_good_t: t,
                        partial: Box::new(traj),
                    }
                });
            }
        }
    }
    traj.stats.rhs_evaluations = sys.evaluations;
    Ok(traj)
}

/// Final state after `steps` equal Dormand–Prince steps (no error control).
pub fn integrate_fixed(
    params: &ModelParams,
    initial: &StateVector,
    window: (f64, f64),
    steps: usize,
) -> Result<StateVector> {
    initial.ensure_finite()?;
    if steps == 0 || window.1.partial_cmp(&window.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Validation(
            "fixed-step integration needs steps > 0 and t0 < t1".into(),
        ));
    }
    let fields = params.channel.active_fields();
    let mut sys = System {
        params,
        fields,
        evaluations: 0,
    };
    let n = 2 * fields.len();
    let h = (window.1 - window.0) / steps as f64;
    let mut y = initial.realify(fields);
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut stages = Stages::new(n);
    sys.eval(window.0, &y, &mut stages.k[0])?;
    for k in 0..steps {
        let t = window.0 + k as f64 * h;
        stages.step(&mut sys, t, h, &y, &mut y_new, &mut err)?;
        if !y_new.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence {
                last_good_t: t,
                partial: Box::default(),
            });
        }
        std::mem::swap(&mut y, &mut y_new);
        let (first, rest) = stages.k.split_at_mut(1);
        std::mem::swap(&mut first[0], &mut rest[5]);
    }
    Ok(sys.state(&y))
}

/// Step-halving study on the fixed-step variant.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderStudy {
    pub steps: Vec<usize>,
    /// Error of each level (against the exact state, or against the next
    /// finer level for a self-convergence study).
    pub errors: Vec<f64>,
    /// `log2(e_k / e_{k+1})` wherever both errors are non-zero.
    pub orders: Vec<f64>,
}

impl OrderStudy {
    /// Order measured between the two finest levels with non-zero error.
    pub fn measured_order(&self) -> Option<f64> {
        self.orders.last().copied()
    }

    fn from_errors(steps: Vec<usize>, errors: Vec<f64>) -> Self {
        let orders = errors
            .windows(2)
            .filter(|w| w[0] > 0.0 && w[1] > 0.0)
            .map(|w| (w[0] / w[1]).log2())
            .collect();
        OrderStudy {
            steps,
            errors,
            orders,
        }
    }
}

/// Self-convergence order from `levels + 1` runs with `base_steps · 2^k` steps.
pub fn order_check(
    params: &ModelParams,
    initial: &StateVector,
    window: (f64, f64),
    base_steps: usize,
    levels: usize,
) -> Result<OrderStudy> {
    let steps: Vec<usize> = (0..=levels).map(|k| base_steps << k).collect();
    let finals = steps
        .iter()
        .map(|&n| integrate_fixed(params, initial, window, n))
        .collect::<Result<Vec<_>>>()?;
    let errors = finals
        .windows(2)
        .map(|w| w[0].max_abs_diff(&w[1]))
        .collect();
    Ok(OrderStudy::from_errors(steps[..levels].to_vec(), errors))
}

/// Convergence order against a known exact final state.
pub fn order_check_against(
    params: &ModelParams,
    initial: &StateVector,
    window: (f64, f64),
    base_steps: usize,
    levels: usize,
    exact: &StateVector,
) -> Result<OrderStudy> {
    let steps: Vec<usize> = (0..levels).map(|k| base_steps << k).collect();
    let errors = steps
        .iter()
        .map(|&n| Ok(integrate_fixed(params, initial, window, n)?.max_abs_diff(exact)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OrderStudy::from_errors(steps, errors))
}
