//! Matter-field species and the mean-field state vector.

use std::ops::{Index, IndexMut};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five matter fields of the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Species {
    AtomA,
    AtomB,
    /// Homonuclear dimer A₂ (first reaction channel).
    DimerAA,
    /// Heteronuclear dimer AB (second reaction channel).
    DimerAB,
    /// Heteronuclear trimer A₂B.
    Trimer,
}

impl Species {
    pub const ALL: [Species; 5] = [
        Species::AtomA,
        Species::AtomB,
        Species::DimerAA,
        Species::DimerAB,
        Species::Trimer,
    ];

    pub const fn index(self) -> usize {
        match self {
            Species::AtomA => 0,
            Species::AtomB => 1,
            Species::DimerAA => 2,
            Species::DimerAB => 3,
            Species::Trimer => 4,
        }
    }

    /// Number of A atoms bound in one particle of this species.
    pub const fn a_atoms(self) -> u32 {
        match self {
            Species::AtomA => 1,
            Species::AtomB => 0,
            Species::DimerAA => 2,
            Species::DimerAB => 1,
            Species::Trimer => 2,
        }
    }

    /// Number of B atoms bound in one particle of this species.
    pub const fn b_atoms(self) -> u32 {
        match self {
            Species::AtomA | Species::DimerAA => 0,
            Species::AtomB | Species::DimerAB | Species::Trimer => 1,
        }
    }

    pub const fn atom_weight(self) -> u32 {
        self.a_atoms() + self.b_atoms()
    }

    /// Short label used in file formats (`a`, `b`, `d1`, `d2`, `g`).
    pub const fn label(self) -> &'static str {
        match self {
            Species::AtomA => "a",
            Species::AtomB => "b",
            Species::DimerAA => "d1",
            Species::DimerAB => "d2",
            Species::Trimer => "g",
        }
    }

    pub fn from_label(label: &str) -> Option<Species> {
        Species::ALL.into_iter().find(|s| s.label() == label)
    }
}

/// Complex amplitudes of the five fields, normalised per initial atom so that
/// `N_i = |psi_i|^2`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "StateRepr", into = "StateRepr")]
pub struct StateVector {
    pub psi: [C64; 5],
}

/// Time derivative of a [`StateVector`]; same layout.
pub type StateDerivative = StateVector;

impl StateVector {
    pub const fn zero() -> Self {
        StateVector {
            psi: [C64::new(0.0, 0.0); 5],
        }
    }

    pub fn from_amplitudes(psi: [C64; 5]) -> Self {
        StateVector { psi }
    }

    /// Stoichiometric 2:1 atomic mixture with every molecular field empty.
    pub fn stoichiometric() -> Self {
        let mut s = Self::zero();
        s[Species::AtomA] = C64::new((2.0f64 / 3.0).sqrt(), 0.0);
        s[Species::AtomB] = C64::new((1.0f64 / 3.0).sqrt(), 0.0);
        s
    }

    pub fn population(&self, species: Species) -> f64 {
        self[species].norm_sqr()
    }

    pub fn populations(&self) -> [f64; 5] {
        self.psi.map(|z| z.norm_sqr())
    }

    pub fn is_finite(&self) -> bool {
        self.psi
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidState(format!(
                "non-finite amplitude in {:?}",
                self.psi
            )))
        }
    }

    /// Weighted atom count `N_a + N_b + 2(N_d1 + N_d2) + 3 N_g`.
    pub fn conserved_atom_number(&self) -> f64 {
        conserved_atom_number(self)
    }

    /// Total number of A atoms, free and bound.
    pub fn a_count(&self) -> f64 {
        Species::ALL
            .iter()
            .map(|&s| s.a_atoms() as f64 * self.population(s))
            .sum()
    }

    /// Total number of B atoms, free and bound.
    pub fn b_count(&self) -> f64 {
        Species::ALL
            .iter()
            .map(|&s| s.b_atoms() as f64 * self.population(s))
            .sum()
    }

    /// Largest component-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.psi
            .iter()
            .zip(other.psi.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Interleaved real layout `[Re ψ₀, Im ψ₀, Re ψ₁, ...]` over `fields`.
    pub fn realify(&self, fields: &[Species]) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * fields.len());
        for &s in fields {
            out.push(self[s].re);
            out.push(self[s].im);
        }
        out
    }

    /// Inverse of [`StateVector::realify`]; fields not listed are zero.
    pub fn from_realified(values: &[f64], fields: &[Species]) -> Self {
        debug_assert_eq!(values.len(), 2 * fields.len());
        let mut s = Self::zero();
        for (k, &sp) in fields.iter().enumerate() {
            s[sp] = C64::new(values[2 * k], values[2 * k + 1]);
        }
        s
    }
}

impl Index<Species> for StateVector {
    type Output = C64;
    fn index(&self, s: Species) -> &C64 {
        &self.psi[s.index()]
    }
}

impl IndexMut<Species> for StateVector {
    fn index_mut(&mut self, s: Species) -> &mut C64 {
        &mut self.psi[s.index()]
    }
}

/// `N_a + N_b + 2(N_d1 + N_d2) + 3 N_g`, conserved by the flow when γ = 0.
pub fn conserved_atom_number(state: &StateVector) -> f64 {
    Species::ALL
        .iter()
        .map(|&s| s.atom_weight() as f64 * state.population(s))
        .sum()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateRepr {
    #[serde(default)]
    a: C64,
    #[serde(default)]
    b: C64,
    #[serde(default)]
    d1: C64,
    #[serde(default)]
    d2: C64,
    #[serde(default)]
    g: C64,
}

impl From<StateRepr> for StateVector {
    fn from(r: StateRepr) -> Self {
        StateVector {
            psi: [r.a, r.b, r.d1, r.d2, r.g],
        }
    }
}

impl From<StateVector> for StateRepr {
    fn from(s: StateVector) -> Self {
        let [a, b, d1, d2, g] = s.psi;
        StateRepr { a, b, d1, d2, g }
    }
}
