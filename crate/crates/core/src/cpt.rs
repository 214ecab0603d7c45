//! Coherent-population-trapping (dark state) algebra.
//!
//! A dark state keeps every dimer amplitude at zero: the Feshbach source of
//! each dimer is cancelled exactly by its photoassociation drain. With
//! η_l = λ_l/Ω_l this gives closed forms for the stationary populations, and
//! the photoassociation detuning Δ that keeps those relations phase-locked
//! in the presence of collisional mean-field shifts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::sample_times;
use crate::model::{Channel, ModelParams, Species, StateVector};
use num_complex::Complex64 as C64;

/// Coupling ratio η = λ/Ω, with Ω = 0 represented by an explicit limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRatio {
    Finite(f64),
    Infinite,
}

impl CouplingRatio {
    /// η = λ/Ω; `Infinite` when the pulse is off.
    pub fn from_couplings(lambda: f64, omega: f64) -> Self {
        if omega == 0.0 {
            CouplingRatio::Infinite
        } else {
            CouplingRatio::Finite(lambda / omega)
        }
    }

    pub fn value(self) -> f64 {
        match self {
            CouplingRatio::Finite(x) => x,
            CouplingRatio::Infinite => f64::INFINITY,
        }
    }

    fn checked(self, name: &str) -> Result<Self> {
        match self {
            CouplingRatio::Finite(x) if x.is_nan() || x < 0.0 => Err(Error::Domain(format!(
                "{name} must be non-negative (got {x})"
            ))),
            CouplingRatio::Finite(x) if x.is_infinite() => Ok(CouplingRatio::Infinite),
            other => Ok(other),
        }
    }
}

impl From<f64> for CouplingRatio {
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            CouplingRatio::Infinite
        } else {
            CouplingRatio::Finite(x)
        }
    }
}

/// Single reaction path through one dimer species.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    /// Through A₂; k = 4.
    Aa,
    /// Through AB; k = 1.
    Ab,
}

impl Path {
    pub fn k(self) -> f64 {
        match self {
            Path::Aa => 4.0,
            Path::Ab => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DarkStateKind {
    Single(Path),
    Dual,
}

/// Stationary dark-state populations and real, non-negative amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DarkStateSolution {
    pub kind: DarkStateKind,
    pub n_a: f64,
    pub n_b: f64,
    /// Always zero.
    pub n_d: f64,
    pub n_g: f64,
    pub amplitudes: StateVector,
    pub eta1: CouplingRatio,
    pub eta2: CouplingRatio,
}

impl DarkStateSolution {
    fn from_populations(
        kind: DarkStateKind,
        n_a: f64,
        n_b: f64,
        n_g: f64,
        eta1: CouplingRatio,
        eta2: CouplingRatio,
    ) -> Self {
        let mut amplitudes = StateVector::zero();
        amplitudes[Species::AtomA] = C64::new(n_a.sqrt(), 0.0);
        amplitudes[Species::AtomB] = C64::new(n_b.sqrt(), 0.0);
        amplitudes[Species::Trimer] = C64::new(n_g.sqrt(), 0.0);
        DarkStateSolution {
            kind,
            n_a,
            n_b,
            n_d: 0.0,
            n_g,
            amplitudes,
            eta1,
            eta2,
        }
    }

    /// `N_a + N_b + 3 N_g`.
    pub fn weighted_sum(&self) -> f64 {
        self.n_a + self.n_b + 3.0 * self.n_g
    }
}

/// Dark state of a single reaction path:
/// `N_g = (1/3) k η² / (1 + k η²)`, `N_b = 1/3 − N_g`, `N_a = 2 N_b`.
pub fn dark_state_single(eta: CouplingRatio, path: Path) -> Result<DarkStateSolution> {
    let eta = eta.checked("eta")?;
    let (n_a, n_b, n_g) = match eta {
        CouplingRatio::Infinite => (0.0, 0.0, 1.0 / 3.0),
        CouplingRatio::Finite(x) => {
            let q = path.k() * x * x;
            if q.is_infinite() {
                (0.0, 0.0, 1.0 / 3.0)
            } else {
                let n_b = (1.0 / 3.0) / (1.0 + q);
                (2.0 * n_b, n_b, (1.0 / 3.0) * q / (1.0 + q))
            }
        }
    };
    let closed = CouplingRatio::Finite(0.0);
    let (eta1, eta2) = match path {
        Path::Aa => (eta, closed),
        Path::Ab => (closed, eta),
    };
    Ok(DarkStateSolution::from_populations(
        DarkStateKind::Single(path),
        n_a,
        n_b,
        n_g,
        eta1,
        eta2,
    ))
}

/// Dark state with both paths open:
/// `N_g = η₁η₂² / (η₁ + η₂ + 3η₁η₂²)`, `N_b = η₁ / (…)`, `N_a = (η₂/η₁) N_b`.
pub fn dark_state_dual(eta1: CouplingRatio, eta2: CouplingRatio) -> Result<DarkStateSolution> {
    use CouplingRatio::{Finite, Infinite};
    let eta1 = eta1.checked("eta1")?;
    let eta2 = eta2.checked("eta2")?;
    let (n_a, n_b, n_g) = match (eta1, eta2) {
        (Finite(0.0), _) => {
            return Err(Error::DegenerateChannel(
                "eta1 = 0 closes the A2 channel; use the single-path AB dark state".into(),
            ))
        }
        (_, Infinite) => (0.0, 0.0, 1.0 / 3.0),
        (Infinite, Finite(e2)) => infinite_eta1(e2),
        (Finite(e1), Finite(e2)) => {
            let den = e1 + e2 + 3.0 * e1 * e2 * e2;
            if den.is_finite() {
                (e2 / den, e1 / den, e1 * e2 * e2 / den)
            } else if e2 >= e1 {
                (0.0, 0.0, 1.0 / 3.0)
            } else {
                infinite_eta1(e2)
            }
        }
    };
    Ok(DarkStateSolution::from_populations(
        DarkStateKind::Dual,
        n_a,
        n_b,
        n_g,
        eta1,
        eta2,
    ))
}

fn infinite_eta1(e2: f64) -> (f64, f64, f64) {
    let den = 1.0 + 3.0 * e2 * e2;
    if den.is_finite() {
        (0.0, 1.0 / den, e2 * e2 / den)
    } else {
        (0.0, 0.0, 1.0 / 3.0)
    }
}

/// Channel ratio `R = η₂/η₁`. Negative ratios admit no dark state.
pub fn channel_ratio(eta1: f64, eta2: f64) -> Result<f64> {
    if eta1 == 0.0 || eta1.is_nan() || eta2.is_nan() {
        return Err(Error::Domain(format!(
            "channel ratio undefined for eta1 = {eta1}, eta2 = {eta2}"
        )));
    }
    let r = eta2 / eta1;
    if r < 0.0 {
        return Err(Error::NoCptSolution(r));
    }
    Ok(r)
}

/// Δ satisfying the generalized two-photon resonance for `sol`.
///
/// Single path:
/// `Δ = −δ + 2(2χ_ag + χ_bg − χ_gg) N_g + (4χ_aa − 2χ_ag + 4χ_ab + χ_bb − χ_bg) N_a`.
/// Both paths: the least-squares fit of [`dual_resonance_detuning`].
pub fn resonance_detuning(params: &ModelParams, sol: &DarkStateSolution) -> f64 {
    match sol.kind {
        DarkStateKind::Single(_) => {
            use Species::{AtomA as A, AtomB as B, Trimer as G};
            let chi = |i, j| params.chi.get(i, j);
            -params.delta
                + 2.0 * (2.0 * chi(A, G) + chi(B, G) - chi(G, G)) * sol.n_g
                + (4.0 * chi(A, A) - 2.0 * chi(A, G) + 4.0 * chi(A, B) + chi(B, B) - chi(B, G))
                    * sol.n_a
        }
        DarkStateKind::Dual => dual_resonance_detuning(params, sol).detuning,
    }
}

/// Common Δ for both channels, fitted in the least-squares sense.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceFit {
    pub detuning: f64,
    /// Δ each channel would need on its own, `[A₂ path, AB path]`.
    pub per_channel: [f64; 2],
    pub residual_norm: f64,
}

/// Each dimer stays empty only while its Feshbach source and its
/// photoassociation drain rotate at the same rate. With dimers empty the
/// atomic phases rotate at `2μ_a`, `2μ_b` (μ_i = Σ_j χ_ij N_j) and the trimer at
/// `2μ_g + Δ + δ`. The A₂ path locks `ψ_a²` to `ψ_b* ψ_g`, the AB path locks
/// `ψ_a ψ_b` to `ψ_a* ψ_g`; each yields one required Δ.
pub fn dual_resonance_detuning(params: &ModelParams, sol: &DarkStateSolution) -> ResonanceFit {
    let pops = sol.amplitudes.populations();
    let rate = |s: Species| 2.0 * params.chi.mean_field(s, &pops);
    let (w_a, w_b, trimer_shift) = (
        rate(Species::AtomA),
        rate(Species::AtomB),
        rate(Species::Trimer),
    );

    // ψ_g must rotate as ψ_a² ψ_b
    let target_aa = 2.0 * w_a + w_b;
    // ψ_g must rotate as ψ_a ψ_b ψ_a
    let target_ab = w_a + w_b + w_a;
    let per_channel = [
        target_aa - trimer_shift - params.delta,
        target_ab - trimer_shift - params.delta,
    ];
    let detuning = 0.5 * (per_channel[0] + per_channel[1]);
    let residual_norm = per_channel
        .iter()
        .map(|d| (d - detuning).powi(2))
        .sum::<f64>()
        .sqrt();
    ResonanceFit {
        detuning,
        per_channel,
        residual_norm,
    }
}

/// Dark state for instantaneous pulse values.
pub fn dark_state_for(params: &ModelParams, omega1: f64, omega2: f64) -> Result<DarkStateSolution> {
    let eta1 = CouplingRatio::from_couplings(params.lambda1, omega1);
    let eta2 = CouplingRatio::from_couplings(params.lambda2, omega2);
    match params.channel {
        Channel::AaOnly => dark_state_single(eta1, Path::Aa),
        Channel::AbOnly => dark_state_single(eta2, Path::Ab),
        Channel::Dual => dark_state_dual(eta1, eta2),
    }
}

/// Dark state at time `t` of the pulse schedules in `params`.
pub fn dark_state_at(params: &ModelParams, t: f64) -> Result<DarkStateSolution> {
    let omega1 = if params.channel.uses_aa() {
        params.omega1.value(t)?
    } else {
        0.0
    };
    let omega2 = if params.channel.uses_ab() {
        params.omega2.value(t)?
    } else {
        0.0
    };
    dark_state_for(params, omega1, omega2)
}

/// Resonance-tracking Δ for the given pulse values.
pub fn tracking_detuning(params: &ModelParams, omega1: f64, omega2: f64) -> Result<f64> {
    let sol = dark_state_for(params, omega1, omega2)?;
    Ok(resonance_detuning(params, &sol))
}

/// One point of the ideal dark-state reference curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CptSample {
    pub t: f64,
    pub solution: DarkStateSolution,
    /// Resonance detuning for this dark state.
    pub detuning: f64,
}

/// Ideal dark-state trimer population along the pulse schedules.
pub fn cpt_reference_curve(
    params: &ModelParams,
    window: (f64, f64),
    stride: f64,
) -> Result<Vec<CptSample>> {
    sample_times(window.0, window.1, stride)?
        .into_iter()
        .map(|t| {
            let solution = dark_state_at(params, t)?;
            let detuning = resonance_detuning(params, &solution);
            Ok(CptSample {
                t,
                solution,
                detuning,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{vector_field, Controls, DetuningMode, PulseSchedule};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn single_path_reference_values() {
        for path in [Path::Aa, Path::Ab] {
            let s = dark_state_single(CouplingRatio::Finite(0.0), path).unwrap();
            assert_eq!((s.n_g, s.n_a, s.n_b), (0.0, 2.0 / 3.0, 1.0 / 3.0));
            let s = dark_state_single(CouplingRatio::Infinite, path).unwrap();
            assert!(close(s.n_g, 1.0 / 3.0, 1e-15));
        }
        let aa = dark_state_single(CouplingRatio::Finite(1.0), Path::Aa).unwrap();
        assert!(close(aa.n_g, 4.0 / 15.0, 1e-15));
        assert!(close(aa.n_a, 2.0 / 15.0, 1e-15));
        assert!(close(aa.n_b, 1.0 / 15.0, 1e-15));
        let ab = dark_state_single(CouplingRatio::Finite(1.0), Path::Ab).unwrap();
        assert!(close(ab.n_g, 1.0 / 6.0, 1e-15));
        assert!(ab.n_g < aa.n_g);
    }

    #[test]
    fn single_path_rejects_negative_eta() {
        let err = dark_state_single(CouplingRatio::Finite(-0.1), Path::Aa).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(dark_state_single(CouplingRatio::Finite(f64::NAN), Path::Ab).is_err());
    }

    #[test]
    fn dual_reference_values() {
        let s = dark_state_dual(1.0.into(), 1.0.into()).unwrap();
        for n in [s.n_g, s.n_a, s.n_b] {
            assert!(close(n, 0.2, 1e-15));
        }
        assert!(close(s.weighted_sum(), 1.0, 1e-15));

        let s = dark_state_dual(1.0.into(), 0.0.into()).unwrap();
        assert_eq!(s.n_g, 0.0);

        let s = dark_state_dual(1.0.into(), 2.0.into()).unwrap();
        assert!(close(s.n_g, 4.0 / 15.0, 1e-15));
    }

    #[test]
    fn dual_degenerate_and_limits() {
        assert!(matches!(
            dark_state_dual(0.0.into(), 1.0.into()),
            Err(Error::DegenerateChannel(_))
        ));
        assert!(matches!(
            dark_state_dual((-1.0).into(), 1.0.into()),
            Err(Error::Domain(_))
        ));
        let s = dark_state_dual(1.0.into(), 1e6.into()).unwrap();
        assert!(close(s.n_g, 1.0 / 3.0, 1e-5));
        let s = dark_state_dual(CouplingRatio::Infinite, CouplingRatio::Infinite).unwrap();
        assert!(close(s.n_g, 1.0 / 3.0, 1e-15));
        let s = dark_state_dual(CouplingRatio::Infinite, 1.0.into()).unwrap();
        assert!(close(s.weighted_sum(), 1.0, 1e-15));
        let huge = dark_state_dual(1e200.into(), 1e300.into()).unwrap();
        assert!(close(huge.n_g, 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn channel_ratio_values() {
        assert_eq!(channel_ratio(1.0, 2.0).unwrap(), 2.0);
        assert_eq!(channel_ratio(2.0, 2.0).unwrap(), 1.0);
        assert!(close(channel_ratio(0.05, 0.15).unwrap(), 3.0, 1e-14));
        assert!(matches!(channel_ratio(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(
            channel_ratio(1.0, -1.0),
            Err(Error::NoCptSolution(_))
        ));
    }

    fn sol_with(n_a: f64, n_g: f64) -> DarkStateSolution {
        let mut s = dark_state_single(CouplingRatio::Finite(0.0), Path::Aa).unwrap();
        s.n_a = n_a;
        s.n_b = n_a / 2.0;
        s.n_g = n_g;
        s
    }

    #[test]
    fn resonance_detuning_hand_values() {
        let mut p = ModelParams::paper_defaults(Channel::AaOnly, 0.0);
        let d = resonance_detuning(&p, &sol_with(2.0 / 3.0, 0.0));
        let expected = (4.0 * 0.3125 - 2.0 * 0.0938 + 4.0 * 0.4214 + 0.5303 - 0.0938) * (2.0 / 3.0);
        assert!(close(d, expected, 1e-14));
        assert!(close(d, 2.1230, 1e-4));

        let d = resonance_detuning(&p, &sol_with(0.0, 1.0 / 3.0));
        assert!(close(d, 0.12507, 1e-5));

        p.chi = crate::model::CollisionMatrix::zero();
        p.delta = 2.5;
        assert_eq!(resonance_detuning(&p, &sol_with(0.3, 0.1)), -2.5);
    }

    #[test]
    fn dual_fit_matches_single_formula_on_single_states() {
        let p = ModelParams::paper_defaults(Channel::AaOnly, -3.0);
        for eta in [0.01, 0.3, 1.0, 7.0] {
            for path in [Path::Aa, Path::Ab] {
                let sol = dark_state_single(CouplingRatio::Finite(eta), path).unwrap();
                let fit = dual_resonance_detuning(&p, &sol);
                assert!(close(fit.detuning, resonance_detuning(&p, &sol), 1e-13));
            }
        }
    }

    #[test]
    fn dual_fit_residual_vanishes() {
        let p = ModelParams::paper_defaults(Channel::Dual, -3.0);
        let sol = dark_state_dual(0.05.into(), 0.1.into()).unwrap();
        let fit = dual_resonance_detuning(&p, &sol);
        assert!(fit.residual_norm < 1e-14);
    }

    #[test]
    fn single_dark_state_is_stationary() {
        let mut p = ModelParams::paper_defaults(Channel::AaOnly, -3.0);
        p.omega1 = PulseSchedule::Constant(20.0);
        let sol = dark_state_at(&p, 0.0).unwrap();
        let controls = p.controls_at(0.0).unwrap();
        assert!(close(controls.detuning, resonance_detuning(&p, &sol), 0.0));
        let f = vector_field(&sol.amplitudes, &p, &controls);
        assert!(f[Species::DimerAA].norm() < 1e-15);
        let rates = crate::model::population_rates(&sol.amplitudes, &f);
        assert!(rates.iter().all(|r| r.abs() < 1e-15), "{rates:?}");
    }

    #[test]
    fn reference_curve_peak_and_tail() {
        let p = ModelParams::paper_defaults(Channel::AaOnly, -3.0);
        let curve = cpt_reference_curve(&p, (0.0, 200.0), 10.0).unwrap();
        assert_eq!(curve.len(), 21);
        let expected = (1.0 / 3.0) * (0.01 / 1.01);
        assert!(close(curve[0].solution.n_g, expected, 1e-15));
        assert!(close(curve[0].solution.n_g, 3.3003e-3, 1e-7));
        assert!(close(curve.last().unwrap().solution.n_g, 1.0 / 3.0, 1e-4));

        let mut constant = p.clone();
        constant.omega1 = PulseSchedule::Constant(3.0);
        let flat = cpt_reference_curve(&constant, (0.0, 5.0), 1.0).unwrap();
        assert!(flat.iter().all(|s| s.solution.n_g == flat[0].solution.n_g));

        let mut off = p.clone();
        off.omega1 = PulseSchedule::Constant(0.0);
        let limit = cpt_reference_curve(&off, (0.0, 1.0), 1.0).unwrap();
        assert!(close(limit[0].solution.n_g, 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn fixed_detuning_breaks_stationarity() {
        let mut p = ModelParams::paper_defaults(Channel::AaOnly, -3.0);
        p.omega1 = PulseSchedule::Constant(20.0);
        let sol = dark_state_at(&p, 0.0).unwrap();
        p.detuning = DetuningMode::Fixed(0.0);
        let controls: Controls = p.controls_at(0.0).unwrap();
        let f = vector_field(&sol.amplitudes, &p, &controls);
        // Instantaneously stationary populations; the phase lock is what fails.
        assert!(f[Species::DimerAA].norm() < 1e-15);
        let g_rate = (f[Species::Trimer] / sol.amplitudes[Species::Trimer]).im;
        let a_rate = (f[Species::AtomA] / sol.amplitudes[Species::AtomA]).im;
        let b_rate = (f[Species::AtomB] / sol.amplitudes[Species::AtomB]).im;
        assert!((g_rate - 2.0 * a_rate - b_rate).abs() > 0.1);
    }
}
