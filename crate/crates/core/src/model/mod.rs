//! Mean-field equations of motion for atoms A and B, the dimers A₂ and AB,
//! and the trimer A₂B.
//!
//! Units: time in λ_ref⁻¹, every rate (λ, Ω, δ, Δ, γ) in λ_ref, collision
//! strengths in λ_ref/n with the initial density absorbed (n = 1). For the
//! Na/Rb system λ_ref = 4.718e4 s⁻¹, so one time unit is about 21.2 µs.
//!
//! The condensate is treated in the single-mode (spatially uniform) limit.

mod collision;
mod pulse;
mod state;

pub use collision::{CollisionMatrix, CHI_AA, CHI_AB, CHI_BB, DEFAULT_FILL};
pub use pulse::{PulseSchedule, RatioSchedule};
pub use state::{conserved_atom_number, Species, StateDerivative, StateVector};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::cpt;
use crate::error::{Error, Result};

/// Which Feshbach/photoassociation pathways are switched on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// A + A → A₂, then A₂ + B → A₂B.
    AaOnly,
    /// A + B → AB, then AB + A → A₂B.
    AbOnly,
    /// Both pathways on the shared atomic and trimer fields.
    Dual,
}

const AA_FIELDS: [Species; 4] = [
    Species::AtomA,
    Species::AtomB,
    Species::DimerAA,
    Species::Trimer,
];
const AB_FIELDS: [Species; 4] = [
    Species::AtomA,
    Species::AtomB,
    Species::DimerAB,
    Species::Trimer,
];

impl Channel {
    pub fn uses_aa(self) -> bool {
        matches!(self, Channel::AaOnly | Channel::Dual)
    }

    pub fn uses_ab(self) -> bool {
        matches!(self, Channel::AbOnly | Channel::Dual)
    }

    /// Fields evolved by this channel configuration (M = 4 or 5).
    pub fn active_fields(self) -> &'static [Species] {
        match self {
            Channel::AaOnly => &AA_FIELDS,
            Channel::AbOnly => &AB_FIELDS,
            Channel::Dual => &Species::ALL,
        }
    }
}

/// How the photoassociation detuning Δ is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningMode {
    Fixed(f64),
    /// Δ(t) follows the generalized two-photon resonance of the instantaneous
    /// dark state.
    CptTracking,
}

fn one() -> f64 {
    1.0
}

fn default_pulse() -> PulseSchedule {
    PulseSchedule::sech(20.0, 20.0)
}

/// Couplings, controls and collision parameters of one simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub channel: Channel,
    /// Feshbach coupling for A + A ↔ A₂.
    #[serde(default = "one")]
    pub lambda1: f64,
    /// Feshbach coupling for A + B ↔ AB.
    #[serde(default = "one")]
    pub lambda2: f64,
    #[serde(default = "default_pulse")]
    pub omega1: PulseSchedule,
    #[serde(default = "default_pulse")]
    pub omega2: PulseSchedule,
    /// Feshbach detuning δ.
    pub delta: f64,
    #[serde(default = "default_detuning")]
    pub detuning: DetuningMode,
    /// Loss rate of untrapped dimers.
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub chi: CollisionMatrix,
}

fn default_detuning() -> DetuningMode {
    DetuningMode::CptTracking
}

impl ModelParams {
    /// Na/Rb defaults: λ = 1, Ω₀/λ = 20, λτ = 20, γ = 1, CPT-tracking Δ.
    pub fn paper_defaults(channel: Channel, delta: f64) -> Self {
        ModelParams {
            channel,
            lambda1: 1.0,
            lambda2: 1.0,
            omega1: default_pulse(),
            omega2: default_pulse(),
            delta,
            detuning: DetuningMode::CptTracking,
            gamma: 1.0,
            chi: CollisionMatrix::paper_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::Validation(format!(
                "gamma ≥ 0 violated (got {})",
                self.gamma
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::Validation("delta must be finite".into()));
        }
        if let DetuningMode::Fixed(d) = self.detuning {
            if !d.is_finite() {
                return Err(Error::Validation("fixed detuning must be finite".into()));
            }
        }
        if self.channel.uses_aa() {
            positive_coupling("lambda1", self.lambda1)?;
            self.omega1.validate()?;
        }
        if self.channel.uses_ab() {
            positive_coupling("lambda2", self.lambda2)?;
            self.omega2.validate()?;
        }
        self.chi.validate()
    }

    /// Pulse values and the detuning Δ at time `t`.
    pub fn controls_at(&self, t: f64) -> Result<Controls> {
        let omega1 = if self.channel.uses_aa() {
            self.omega1.value(t)?
        } else {
            0.0
        };
        let omega2 = if self.channel.uses_ab() {
            self.omega2.value(t)?
        } else {
            0.0
        };
        let detuning = match self.detuning {
            DetuningMode::Fixed(d) => d,
            DetuningMode::CptTracking => cpt::tracking_detuning(self, omega1, omega2)?,
        };
        Ok(Controls {
            omega1,
            omega2,
            detuning,
        })
    }
}

fn positive_coupling(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{name} > 0 for an active channel (got {value})"
        )))
    }
}

/// Instantaneous external controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Controls {
    pub omega1: f64,
    pub omega2: f64,
    /// Photoassociation detuning Δ.
    pub detuning: f64,
}

/// Right-hand side for already-resolved controls. Pure; performs no checks.
///
/// Collision terms `2i Σ_j χ_ij |ψ_j|² ψ_i` act on every field. Dimer slots of
/// inactive channels get an exactly zero derivative.
pub fn vector_field(state: &StateVector, params: &ModelParams, controls: &Controls) -> StateVector {
    use Species::*;
    let i = C64::i();
    let pops = state.populations();
    let [a, b, d1, d2, g] = state.psi;

    let mut f = StateVector::zero();
    for s in Species::ALL {
        f[s] = i * (2.0 * params.chi.mean_field(s, &pops)) * state[s];
    }

    let damped = C64::new(-params.gamma, params.delta);
    let channel = params.channel;
    if channel.uses_aa() {
        let (lambda, omega) = (params.lambda1, controls.omega1);
        f[AtomA] += i * (2.0 * lambda) * d1 * a.conj();
        f[AtomB] -= i * omega * d1.conj() * g;
        f[DimerAA] += damped * d1 + i * lambda * a * a - i * omega * b.conj() * g;
        f[Trimer] -= i * omega * d1 * b;
    } else {
        f[DimerAA] = C64::new(0.0, 0.0);
    }
    if channel.uses_ab() {
        let (lambda, omega) = (params.lambda2, controls.omega2);
        f[AtomA] += i * lambda * d2 * b.conj() - i * omega * d2.conj() * g;
        f[AtomB] += i * lambda * d2 * a.conj();
        f[DimerAB] += damped * d2 + i * lambda * a * b - i * omega * a.conj() * g;
        f[Trimer] -= i * omega * d2 * a;
    } else {
        f[DimerAB] = C64::new(0.0, 0.0);
    }
    f[Trimer] += i * (controls.detuning + params.delta) * g;
    f
}

/// Single-channel equations of motion (`AaOnly` or `AbOnly`).
pub fn rhs_single(state: &StateVector, t: f64, params: &ModelParams) -> Result<StateDerivative> {
    if params.channel == Channel::Dual {
        return Err(Error::Configuration(
            "rhs_single requires channel aa_only or ab_only".into(),
        ));
    }
    rhs(state, t, params)
}

/// Two-channel equations of motion.
pub fn rhs_dual(state: &StateVector, t: f64, params: &ModelParams) -> Result<StateDerivative> {
    if params.channel != Channel::Dual {
        return Err(Error::Configuration(
            "rhs_dual requires channel dual".into(),
        ));
    }
    rhs(state, t, params)
}

/// Equations of motion for whichever channel `params` selects.
pub fn rhs(state: &StateVector, t: f64, params: &ModelParams) -> Result<StateDerivative> {
    state.ensure_finite()?;
    let controls = params.controls_at(t)?;
    Ok(vector_field(state, params, &controls))
}

/// `dN_i/dt = 2 Re(ψ_i* dψ_i/dt)` for every species.
pub fn population_rates(state: &StateVector, derivative: &StateDerivative) -> [f64; 5] {
    let mut out = [0.0; 5];
    for (k, (psi, dpsi)) in state.psi.iter().zip(derivative.psi.iter()).enumerate() {
        out[k] = 2.0 * (psi.conj() * dpsi).re;
    }
    out
}

/// Rate of change of the weighted atom number implied by `derivative`.
pub fn atom_number_rate(state: &StateVector, derivative: &StateDerivative) -> f64 {
    population_rates(state, derivative)
        .iter()
        .zip(Species::ALL)
        .map(|(r, s)| r * s.atom_weight() as f64)
        .sum()
}
