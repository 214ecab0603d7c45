//! Symmetric s-wave collision matrix χ_ij.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::state::Species;
use crate::error::{Error, Result};

/// Value used for every pair not measured separately.
pub const DEFAULT_FILL: f64 = 0.0938;
/// χ_aa for ²³Na.
pub const CHI_AA: f64 = 0.3125;
/// χ_bb for ⁸⁷Rb.
pub const CHI_BB: f64 = 0.5303;
/// χ_ab for Na-Rb.
pub const CHI_AB: f64 = 0.4214;

/// Collision strengths in units of λ_ref/n. Always symmetric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CollisionSpec", into = "CollisionSpec")]
pub struct CollisionMatrix {
    chi: [[f64; 5]; 5],
}

impl CollisionMatrix {
    pub fn zero() -> Self {
        Self::uniform(0.0)
    }

    pub fn uniform(fill: f64) -> Self {
        CollisionMatrix {
            chi: [[fill; 5]; 5],
        }
    }

    /// Na/Rb parameter set: measured atomic entries, `DEFAULT_FILL` elsewhere
    /// and no dimer-dimer cross collision (χ_d1d2 = 0).
    pub fn paper_default() -> Self {
        Self::uniform(DEFAULT_FILL)
            .with(Species::AtomA, Species::AtomA, CHI_AA)
            .with(Species::AtomB, Species::AtomB, CHI_BB)
            .with(Species::AtomA, Species::AtomB, CHI_AB)
            .with(Species::DimerAA, Species::DimerAB, 0.0)
    }

    /// Sets χ_ij and χ_ji.
    pub fn with(mut self, i: Species, j: Species, value: f64) -> Self {
        self.set(i, j, value);
        self
    }

    pub fn set(&mut self, i: Species, j: Species, value: f64) {
        self.chi[i.index()][j.index()] = value;
        self.chi[j.index()][i.index()] = value;
    }

    pub fn get(&self, i: Species, j: Species) -> f64 {
        self.chi[i.index()][j.index()]
    }

    pub fn as_array(&self) -> &[[f64; 5]; 5] {
        &self.chi
    }

    /// Mean-field shift `Σ_j χ_ij N_j` felt by species `i`.
    pub fn mean_field(&self, i: Species, populations: &[f64; 5]) -> f64 {
        self.chi[i.index()]
            .iter()
            .zip(populations.iter())
            .map(|(c, n)| c * n)
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..5 {
            for j in 0..5 {
                let v = self.chi[i][j];
                if !v.is_finite() {
                    return Err(Error::Validation(format!(
                        "collision matrix entries must be finite (chi[{i}][{j}] = {v})"
                    )));
                }
                if v != self.chi[j][i] {
                    return Err(Error::Validation(format!(
                        "collision matrix must be symmetric (chi[{i}][{j}] != chi[{j}][{i}])"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Default for CollisionMatrix {
    fn default() -> Self {
        Self::paper_default()
    }
}

/// On-disk form: either a full `matrix`, or a `fill` value plus named `pairs`
/// such as `"aa"`, `"ab"`, `"d1d2"`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CollisionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<[[f64; 5]; 5]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fill: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pairs: BTreeMap<String, f64>,
}

fn parse_pair(key: &str) -> Option<(Species, Species)> {
    for first in Species::ALL {
        if let Some(rest) = key.strip_prefix(first.label()) {
            if let Some(second) = Species::from_label(rest) {
                return Some((first, second));
            }
        }
    }
    None
}

impl TryFrom<CollisionSpec> for CollisionMatrix {
    type Error = Error;

    fn try_from(spec: CollisionSpec) -> Result<Self> {
        let m = match spec.matrix {
            Some(matrix) => {
                if spec.fill.is_some() || !spec.pairs.is_empty() {
                    return Err(Error::Validation(
                        "collision 'matrix' cannot be combined with 'fill' or 'pairs'".into(),
                    ));
                }
                CollisionMatrix { chi: matrix }
            }
            None => {
                let mut m = CollisionMatrix::uniform(spec.fill.unwrap_or(DEFAULT_FILL));
                for (key, value) in &spec.pairs {
                    let (i, j) = parse_pair(key).ok_or_else(|| {
                        Error::Validation(format!("unknown collision pair '{key}'"))
                    })?;
                    m.set(i, j, *value);
                }
                m
            }
        };
        m.validate()?;
        Ok(m)
    }
}

impl From<CollisionMatrix> for CollisionSpec {
    fn from(m: CollisionMatrix) -> Self {
        CollisionSpec {
            matrix: Some(m.chi),
            fill: None,
            pairs: BTreeMap::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_default_entries() {
        let m = CollisionMatrix::paper_default();
        assert_eq!(m.get(Species::AtomA, Species::AtomA), 0.3125);
        assert_eq!(m.get(Species::AtomB, Species::AtomB), 0.5303);
        assert_eq!(m.get(Species::AtomB, Species::AtomA), 0.4214);
        assert_eq!(m.get(Species::Trimer, Species::AtomB), 0.0938);
        assert_eq!(m.get(Species::DimerAB, Species::DimerAA), 0.0);
        m.validate().unwrap();
    }

    #[test]
    fn pairs_document() {
        let m: CollisionMatrix =
            serde_json::from_str(r#"{"fill": 0.1, "pairs": {"ag": 0.5, "d1d2": 0.0}}"#).unwrap();
        assert_eq!(m.get(Species::Trimer, Species::AtomA), 0.5);
        assert_eq!(m.get(Species::DimerAA, Species::DimerAB), 0.0);
        assert_eq!(m.get(Species::AtomB, Species::AtomB), 0.1);
        assert!(serde_json::from_str::<CollisionMatrix>(r#"{"pairs": {"ax": 1.0}}"#).is_err());
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let mut matrix = [[0.0; 5]; 5];
        matrix[0][1] = 1.0;
        let text = serde_json::to_string(&serde_json::json!({ "matrix": matrix })).unwrap();
        let err = serde_json::from_str::<CollisionMatrix>(&text).unwrap_err();
        assert!(err.to_string().contains("symmetric"));
    }
}
