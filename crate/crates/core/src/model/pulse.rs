//! Time-dependent photoassociation Rabi frequencies Ω(t).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of one photoassociation pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseSchedule {
    /// `amplitude * sech(t / width)`, peaking at t = 0.
    Sech {
        amplitude: f64,
        width: f64,
    },
    Constant(f64),
    /// `(time, value)` pairs, linearly interpolated; undefined outside the
    /// first and last time.
    Tabulated(Vec<(f64, f64)>),
    /// `coupling_ratio * base(t) / R(t)`. Used for the second channel so that
    /// `η₂(t) / η₁(t) = R(t)` with `coupling_ratio = λ₂/λ₁`.
    RatioDriven {
        base: Box<PulseSchedule>,
        coupling_ratio: f64,
        ratio: RatioSchedule,
    },
}

impl PulseSchedule {
    pub fn sech(amplitude: f64, width: f64) -> Self {
        PulseSchedule::Sech { amplitude, width }
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        match self {
            PulseSchedule::Sech { amplitude, width } => Ok(amplitude / (t / width).cosh()),
            PulseSchedule::Constant(v) => Ok(*v),
            PulseSchedule::Tabulated(points) => interpolate(points, t).ok_or_else(|| {
                Error::Configuration(format!("tabulated pulse undefined at t = {t}"))
            }),
            PulseSchedule::RatioDriven {
                base,
                coupling_ratio,
                ratio,
            } => Ok(coupling_ratio * base.value(t)? / ratio.value(t)),
        }
    }

    /// Whether `value` is defined on the whole closed interval.
    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        match self {
            PulseSchedule::Tabulated(points) => match (points.first(), points.last()) {
                (Some(first), Some(last)) => first.0 <= t0 && t1 <= last.0,
                _ => false,
            },
            PulseSchedule::RatioDriven { base, .. } => base.covers(t0, t1),
            _ => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PulseSchedule::Sech { amplitude, width } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return Err(Error::Validation(format!(
                        "sech pulse amplitude ≥ 0 (got {amplitude})"
                    )));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::Validation(format!(
                        "sech pulse width > 0 (got {width})"
                    )));
                }
            }
            PulseSchedule::Constant(v) => {
                if !(v.is_finite() && *v >= 0.0) {
                    return Err(Error::Validation(format!(
                        "constant pulse value ≥ 0 (got {v})"
                    )));
                }
            }
            PulseSchedule::Tabulated(points) => {
                if points.is_empty() {
                    return Err(Error::Validation(
                        "tabulated pulse needs at least one point".into(),
                    ));
                }
                if points
                    .iter()
                    .any(|(t, v)| !t.is_finite() || !v.is_finite() || *v < 0.0)
                {
                    return Err(Error::Validation(
                        "tabulated pulse values must be finite and ≥ 0".into(),
                    ));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::Validation(
                        "tabulated pulse times must be strictly increasing".into(),
                    ));
                }
            }
            PulseSchedule::RatioDriven {
                base,
                coupling_ratio,
                ratio,
            } => {
                base.validate()?;
                if !(coupling_ratio.is_finite() && *coupling_ratio > 0.0) {
                    return Err(Error::Validation(format!(
                        "coupling ratio > 0 (got {coupling_ratio})"
                    )));
                }
                ratio.validate()?;
            }
        }
        Ok(())
    }
}

/// Time dependence of the channel ratio `R(t) = η₂/η₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioSchedule {
    Constant(f64),
    /// `(time, R)` knots, linear in between and held constant outside.
    PiecewiseLinear(Vec<(f64, f64)>),
}

impl RatioSchedule {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            RatioSchedule::Constant(r) => *r,
            RatioSchedule::PiecewiseLinear(knots) => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if t <= first.0 {
                    first.1
                } else if t >= last.0 {
                    last.1
                } else {
                    interpolate(knots, t).unwrap_or(last.1)
                }
            }
        }
    }

    /// Knot values (a single entry for a constant ratio).
    pub fn values(&self) -> Vec<f64> {
        match self {
            RatioSchedule::Constant(r) => vec![*r],
            RatioSchedule::PiecewiseLinear(knots) => knots.iter().map(|k| k.1).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let values = self.values();
        if values.is_empty() {
            return Err(Error::Validation(
                "ratio schedule needs at least one knot".into(),
            ));
        }
        if values.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Validation(format!(
                "ratio R > 0 on the whole window (got {values:?})"
            )));
        }
        if let RatioSchedule::PiecewiseLinear(knots) = self {
            if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Validation(
                    "ratio knot times must be increasing".into(),
                ));
            }
        }
        Ok(())
    }
}

fn interpolate(points: &[(f64, f64)], t: f64) -> Option<f64> {
    let first = points.first()?;
    let last = points.last()?;
    if t < first.0 || t > last.0 || t.is_nan() {
        return None;
    }
    let k = points.partition_point(|p| p.0 <= t);
    if k == points.len() {
        return Some(last.1);
    }
    let (t0, v0) = points[k - 1];
    let (t1, v1) = points[k];
    Some(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
}
