//! Linear stability of the dark-state evolution.
//!
//! At each sample the equations of motion are frozen, linearized by central
//! finite differences, and the eigenvalues μ of the linearized flow are
//! computed. Purely imaginary μ are oscillating normal modes; any μ with a
//! positive real part grows and marks the evolution as dynamically unstable.
//!
//! The dark state is stationary only up to the two global phase rotations
//! (one per atomic species). The analysis therefore works in the frame that
//! co-rotates with those phases and removes the symmetry subspace: phase
//! rotations are exact zero modes, and the conserved A and B atom numbers
//! pin their Jordan partners. Left in place, finite-difference noise splits
//! these defective zero eigenvalues into spurious ±√ε pairs.

mod eigen;

pub use eigen::{eigen_spectrum, MAX_DIMENSION};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cpt;
use crate::error::{Error, Result};
use crate::integrator::{sample_times, Trajectory};
use crate::model::{vector_field, Controls, ModelParams, Species, StateVector};

/// Central-difference step on each real component.
pub const FD_STEP: f64 = 1e-6;
/// Classification threshold on max Re μ, in λ_ref.
pub const DEFAULT_THRESHOLD: f64 = 1e-8;
/// Eigenvalues smaller than this in modulus are treated as symmetry modes.
pub const ZERO_MODE_CUTOFF: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Stable,
    Unstable,
}

/// Realified right-hand side at frozen controls, optionally in a frame
/// rotating at `rotation[s]` for each species.
fn realified_field(
    y: &[f64],
    fields: &[Species],
    params: &ModelParams,
    controls: &Controls,
    rotation: Option<&[f64; 5]>,
) -> Vec<f64> {
    let state = StateVector::from_realified(y, fields);
    let mut f = vector_field(&state, params, controls);
    if let Some(w) = rotation {
        for &s in fields {
            f[s] -= C64::new(0.0, w[s.index()]) * state[s];
        }
    }
    f.realify(fields)
}

fn fd_jacobian(
    state: &StateVector,
    params: &ModelParams,
    controls: &Controls,
    rotation: Option<&[f64; 5]>,
    h: f64,
    central: bool,
) -> Result<DMatrix<f64>> {
    let fields = params.channel.active_fields();
    let y0 = state.realify(fields);
    let n = y0.len();
    let base = if central {
        Vec::new()
    } else {
        realified_field(&y0, fields, params, controls, rotation)
    };
    let mut jac = DMatrix::zeros(n, n);
    let mut y = y0.clone();
    for k in 0..n {
        y[k] = y0[k] + h;
        let plus = realified_field(&y, fields, params, controls, rotation);
        let (minus, width) = if central {
            y[k] = y0[k] - h;
            (
                realified_field(&y, fields, params, controls, rotation),
                2.0 * h,
            )
        } else {
            (base.clone(), h)
        };
        y[k] = y0[k];
        for i in 0..n {
            let d = (plus[i] - minus[i]) / width;
            if !d.is_finite() {
                return Err(Error::Evaluation(format!(
                    "non-finite right-hand side while differentiating component {k}"
                )));
            }
            jac[(i, k)] = d;
        }
    }
    Ok(jac)
}

/// Jacobian of the realified right-hand side, `∂F_i/∂y_k`, by central
/// differences with step [`FD_STEP`]. Components are interleaved
/// `(Re ψ, Im ψ)` over the channel's active fields.
pub fn jacobian_fd(state: &StateVector, t: f64, params: &ModelParams) -> Result<DMatrix<f64>> {
    state.ensure_finite()?;
    let controls = params.controls_at(t)?;
    fd_jacobian(state, params, &controls, None, FD_STEP, true)
}

/// One-sided (forward) difference variant with a caller-chosen step.
pub fn jacobian_forward(
    state: &StateVector,
    t: f64,
    params: &ModelParams,
    h: f64,
) -> Result<DMatrix<f64>> {
    state.ensure_finite()?;
    let controls = params.controls_at(t)?;
    fd_jacobian(state, params, &controls, None, h, false)
}

/// Phase rotation rates of the A and B atoms read off the flow at `state`;
/// a species rotates at `a_atoms·ω_A + b_atoms·ω_B`.
fn corotation(state: &StateVector, f: &StateVector) -> [f64; 5] {
    let rate = |s: Species| {
        let z = state[s];
        if z.norm() > 1e-150 {
            Some((f[s] / z).im)
        } else {
            None
        }
    };
    let w_a = rate(Species::AtomA).unwrap_or(0.0);
    let w_b = rate(Species::AtomB)
        .or_else(|| rate(Species::Trimer).map(|w_g| w_g - 2.0 * w_a))
        .unwrap_or(0.0);
    Species::ALL.map(|s| s.a_atoms() as f64 * w_a + s.b_atoms() as f64 * w_b)
}

/// Orthonormal directions spanned by the symmetry modes: the phase
/// generators `i·G·ψ` and the atom-number gradients `G·ψ`, for G the A and B
/// atom counts.
fn symmetry_directions(state: &StateVector, fields: &[Species]) -> Vec<Vec<f64>> {
    let mut raw = Vec::with_capacity(4);
    for count in [Species::a_atoms as fn(Species) -> u32, Species::b_atoms] {
        let mut weighted = StateVector::zero();
        for &s in fields {
            weighted[s] = count(s) as f64 * state[s];
        }
        raw.push(weighted.realify(fields));
        let mut rotated = weighted;
        for &s in fields {
            rotated[s] *= C64::i();
        }
        raw.push(rotated.realify(fields));
    }
    let scale = state
        .realify(fields)
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    orthonormalize(raw, 1e-8 * scale.max(f64::MIN_POSITIVE))
}

fn orthonormalize(vectors: Vec<Vec<f64>>, drop_below: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut v in vectors {
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > drop_below {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis
}

/// Orthonormal completion of `basis` to the full space.
fn complement(basis: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut all = basis.to_vec();
    let mut out = Vec::new();
    while all.len() < n {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for k in 0..n {
            let mut v = vec![0.0; n];
            v[k] = 1.0;
            for _ in 0..2 {
                for b in &all {
                    let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
                best = Some((norm, v));
            }
        }
        let (norm, mut v) = best.expect("n > 0");
        v.iter_mut().for_each(|x| *x /= norm);
        all.push(v.clone());
        out.push(v);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySample {
    pub t: f64,
    /// 2M eigenvalues of the linearized flow; removed symmetry modes are
    /// reported as exact zeros.
    pub eigenvalues: Vec<C64>,
    /// Largest real part among eigenvalues with |μ| ≥ [`ZERO_MODE_CUTOFF`].
    pub max_real_part: f64,
    pub classification: Classification,
    /// Norm of the co-rotating-frame right-hand side at the linearization
    /// point (zero for an exact relative equilibrium).
    pub frame_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub threshold: f64,
    pub samples: Vec<StabilitySample>,
}

impl StabilityReport {
    pub fn unstable_count(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| s.classification == Classification::Unstable)
            .count()
    }

    pub fn is_stable(&self) -> bool {
        self.unstable_count() == 0
    }

    pub fn max_real_part(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.max_real_part)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    pub threshold: f64,
    /// Work in the co-rotating frame and remove the symmetry subspace.
    pub reduce_symmetry: bool,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            threshold: DEFAULT_THRESHOLD,
            reduce_symmetry: true,
        }
    }
}

/// Linearization points for [`stability_scan`].
#[derive(Clone, Copy, Debug)]
pub enum ScanSource<'a> {
    /// Instantaneous dark states along the pulse schedules.
    CptCurve { window: (f64, f64), stride: f64 },
    /// Samples of an integrated trajectory.
    Trajectory(&'a Trajectory),
}

/// Spectrum of the linearized flow at `state` for frozen `controls`.
pub fn analyze_point(
    t: f64,
    state: &StateVector,
    params: &ModelParams,
    controls: &Controls,
    options: &StabilityOptions,
) -> Result<StabilitySample> {
    state.ensure_finite()?;
    let fields = params.channel.active_fields();
    let n = 2 * fields.len();

    let (eigenvalues, frame_residual) = if options.reduce_symmetry {
        let f = vector_field(state, params, controls);
        let rotation = corotation(state, &f);
        let residual = realified_field(
            &state.realify(fields),
            fields,
            params,
            controls,
            Some(&rotation),
        )
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
        let jac = fd_jacobian(state, params, controls, Some(&rotation), FD_STEP, true)?;
        let symmetric = symmetry_directions(state, fields);
        let q = complement(&symmetric, n);
        let basis = DMatrix::from_fn(n, q.len(), |i, j| q[j][i]);
        let reduced = basis.transpose() * &jac * &basis;
        let mut ev = eigen_spectrum(&reduced)?;
        ev.extend(std::iter::repeat_n(C64::new(0.0, 0.0), symmetric.len()));
        (ev, residual)
    } else {
        let jac = fd_jacobian(state, params, controls, None, FD_STEP, true)?;
        let f = vector_field(state, params, controls);
        let residual = f.realify(fields).iter().map(|v| v * v).sum::<f64>().sqrt();
        (eigen_spectrum(&jac)?, residual)
    };

    let max_real_part = eigenvalues
        .iter()
        .filter(|mu| mu.norm() >= ZERO_MODE_CUTOFF)
        .map(|mu| mu.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_real_part = if max_real_part.is_finite() {
        max_real_part
    } else {
        0.0
    };
    let classification = if max_real_part > options.threshold {
        Classification::Unstable
    } else {
        Classification::Stable
    };
    Ok(StabilitySample {
        t,
        eigenvalues,
        max_real_part,
        classification,
        frame_residual,
    })
}

/// Stability classification at every point of `source`. Points are analysed
/// in parallel and assembled in time order.
pub fn stability_scan(
    source: ScanSource<'_>,
    params: &ModelParams,
    options: &StabilityOptions,
) -> Result<StabilityReport> {
    let points: Vec<(f64, StateVector, Controls)> = match source {
        ScanSource::CptCurve { window, stride } => sample_times(window.0, window.1, stride)?
            .into_iter()
            .map(|t| {
                let sol = cpt::dark_state_at(params, t)?;
                let mut controls = params.controls_at(t)?;
                if params.detuning == crate::model::DetuningMode::CptTracking {
                    controls.detuning = cpt::resonance_detuning(params, &sol);
                }
                Ok((t, sol.amplitudes, controls))
            })
            .collect::<Result<_>>()?,
        ScanSource::Trajectory(traj) => traj
            .samples
            .iter()
            .map(|s| (s.t, s.state, s.controls))
            .collect(),
    };
    let samples = points
        .par_iter()
        .map(|(t, state, controls)| analyze_point(*t, state, params, controls, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport {
        threshold: options.threshold,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Channel, CollisionMatrix, DetuningMode, PulseSchedule};

    fn linear_params() -> ModelParams {
        ModelParams {
            channel: Channel::AaOnly,
            lambda1: 0.0,
            lambda2: 0.0,
            omega1: PulseSchedule::Constant(0.0),
            omega2: PulseSchedule::Constant(0.0),
            delta: 2.0,
            detuning: DetuningMode::Fixed(0.5),
            gamma: 1.0,
            chi: CollisionMatrix::zero(),
        }
    }

    #[test]
    fn linear_system_dimer_block() {
        let p = linear_params();
        let j = jacobian_fd(&StateVector::stoichiometric(), 0.0, &p).unwrap();
        assert_eq!(j.shape(), (8, 8));
        // dimer is field index 2 of the AA layout
        let block = j.view((4, 4), (2, 2));
        let expected = [[-1.0, -2.0], [2.0, -1.0]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((block[(r, c)] - expected[r][c]).abs() < 1e-9);
            }
        }
        for r in 0..8 {
            for c in 0..8 {
                if r / 2 != c / 2 {
                    assert!(j[(r, c)].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn linear_system_spectrum() {
        // atoms only: a relative equilibrium of the linear system
        let p = linear_params();
        let s = StateVector::stoichiometric();
        for reduce_symmetry in [true, false] {
            let opts = StabilityOptions {
                reduce_symmetry,
                ..Default::default()
            };
            let sample = analyze_point(0.0, &s, &p, &p.controls_at(0.0).unwrap(), &opts).unwrap();
            assert_eq!(sample.eigenvalues.len(), 8);
            assert_eq!(sample.classification, Classification::Stable);
            let mut nonzero: Vec<C64> = sample
                .eigenvalues
                .iter()
                .copied()
                .filter(|mu| mu.norm() > 1e-6)
                .collect();
            nonzero.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
            let expected = [
                C64::new(-1.0, -2.0),
                C64::new(-1.0, 2.0),
                C64::new(0.0, -2.5),
                C64::new(0.0, 2.5),
            ];
            assert_eq!(nonzero.len(), 4);
            for (mu, e) in nonzero.iter().zip(expected) {
                assert!((mu - e).norm() < 1e-7, "{mu} vs {e}");
            }
        }
    }

    #[test]
    fn symmetry_directions_are_zero_modes_of_corotating_jacobian() {
        let mut p = ModelParams::paper_defaults(Channel::AaOnly, -3.0);
        p.omega1 = PulseSchedule::Constant(5.0);
        let sol = cpt::dark_state_at(&p, 0.0).unwrap();
        let controls = p.controls_at(0.0).unwrap();
        let f = vector_field(&sol.amplitudes, &p, &controls);
        let rot = corotation(&sol.amplitudes, &f);
        let j = fd_jacobian(&sol.amplitudes, &p, &controls, Some(&rot), FD_STEP, true).unwrap();
        let fields = p.channel.active_fields();
        let dirs = symmetry_directions(&sol.amplitudes, fields);
        assert_eq!(dirs.len(), 4);
        // phase generators are right null vectors
        for gen in [&dirs[1], &dirs[3]] {
            let v = nalgebra::DVector::from_column_slice(gen);
            assert!((&j * v).norm() < 1e-8);
        }
    }

    #[test]
    fn report_dimension_matches_channel() {
        for (channel, m) in [
            (Channel::AaOnly, 4),
            (Channel::AbOnly, 4),
            (Channel::Dual, 5),
        ] {
            let p = ModelParams::paper_defaults(channel, -3.0);
            let report = stability_scan(
                ScanSource::CptCurve {
                    window: (0.0, 20.0),
                    stride: 10.0,
                },
                &p,
                &StabilityOptions::default(),
            )
            .unwrap();
            assert_eq!(report.samples.len(), 3);
            for s in &report.samples {
                assert_eq!(s.eigenvalues.len(), 2 * m);
                assert!(s.frame_residual < 1e-12);
                assert_eq!(
                    s.classification == Classification::Unstable,
                    s.max_real_part > report.threshold
                );
            }
        }
    }
}
