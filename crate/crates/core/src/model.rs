//! Closed-form quantum predictions for the two-crystal source.
//!
//! The state is `ρ = v |ψ><ψ| + (1 - v) I/4` with
//! `|ψ> = (|HH> + f e^{iφ} |VV>) / sqrt(1 + f²)`, and each arm carries an
//! ideal linear polarizer projecting onto `cos θ |H> + sin θ |V>`.
//! Probabilities are per emitted pair and exclude detector efficiency.

use crate::math::{abs, cos, sin, wrap, TAU};
use crate::settings::AnalyzerSetting;
use crate::{Error, Result};

/// Round-off allowance when deriving joint outcome probabilities by
/// subtraction.
const JOINT_TOLERANCE: f64 = 1e-12;

/// Polarization-entangled pair source with a white-noise admixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntangledState {
    f: f64,
    phi: f64,
    v: f64,
}

impl EntangledState {
    /// `f` is the `|VV>` to `|HH>` amplitude ratio, `phi` the relative phase in
    /// radians, `v` the weight of the pure component.
    pub fn new(f: f64, phi: f64, v: f64) -> Result<Self> {
        if !f.is_finite() || f < 0.0 {
            return Err(Error::domain("f", f, "a finite value >= 0"));
        }
        if !phi.is_finite() {
            return Err(Error::domain("phi", phi, "a finite phase in radians"));
        }
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(Error::domain("v", v, "a value in [0, 1]"));
        }
        Ok(EntangledState {
            f,
            phi: wrap(phi, TAU),
            v,
        })
    }

    /// Noiseless state with zero relative phase.
    pub fn pure(f: f64) -> Result<Self> {
        Self::new(f, 0.0, 1.0)
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    /// Relative phase in `[0, 2π)`.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn is_maximally_entangled(&self) -> bool {
        self.f == 1.0 && self.v == 1.0
    }

    /// Pure-state coincidence probability for two polarizer angles in radians.
    #[inline]
    pub(crate) fn pure_coincidence(&self, a: f64, b: f64) -> f64 {
        let (sa, ca) = (sin(a), cos(a));
        let (sb, cb) = (sin(b), cos(b));
        self.pure_coincidence_trig(ca, sa, cb, sb)
    }

    #[inline]
    pub(crate) fn pure_coincidence_trig(&self, ca: f64, sa: f64, cb: f64, sb: f64) -> f64 {
        let hh = ca * cb;
        let vv = sa * sb;
        let f = self.f;
        let amp2 = hh * hh + f * f * vv * vv + 2.0 * f * cos(self.phi) * hh * vv;
        amp2 / (1.0 + f * f)
    }

    #[inline]
    pub(crate) fn pure_single_trig(&self, c: f64, s: f64) -> f64 {
        let f = self.f;
        (c * c + f * f * s * s) / (1.0 + f * f)
    }

    /// Coincidence probability for polarizer angles in radians.
    #[inline]
    pub(crate) fn coincidence_rad(&self, a: f64, b: f64) -> f64 {
        clamp_unit(self.v * self.pure_coincidence(a, b) + (1.0 - self.v) / 4.0)
    }

    /// Single-arm pass probability for a polarizer angle in radians. Both arms
    /// share this form.
    #[inline]
    pub(crate) fn single_rad(&self, a: f64) -> f64 {
        clamp_unit(self.v * self.pure_single_trig(cos(a), sin(a)) + (1.0 - self.v) / 2.0)
    }
}

/// Build a validated state. `phi` is in radians.
pub fn make_state(f: f64, phi: f64, v: f64) -> Result<EntangledState> {
    EntangledState::new(f, phi, v)
}

/// Which arm of the apparatus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    One,
    Two,
}

/// Probability that both photons pass their analyzers.
pub fn coincidence_probability(
    state: &EntangledState,
    a1: AnalyzerSetting,
    a2: AnalyzerSetting,
) -> f64 {
    match (a1.radians(), a2.radians()) {
        (Some(a), Some(b)) => state.coincidence_rad(a, b),
        (Some(a), None) => state.single_rad(a),
        (None, Some(b)) => state.single_rad(b),
        (None, None) => 1.0,
    }
}

/// Probability that the photon on `side` passes its analyzer, irrespective of
/// the other arm.
pub fn single_probability(state: &EntangledState, a: AnalyzerSetting, _side: Side) -> f64 {
    match a.radians() {
        Some(theta) => state.single_rad(theta),
        None => 1.0,
    }
}

/// Pass/fail outcome distribution of one pair at two analyzers, before
/// detector efficiency. Index 1 is "pass", 0 is "fail"; the first digit is
/// arm 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOutcome {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl JointOutcome {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p11, self.p10, self.p01, self.p00]
    }

    pub fn total(&self) -> f64 {
        self.p11 + self.p10 + self.p01 + self.p00
    }

    /// Map a uniform draw in `[0, 1)` to `(arm 1 passes, arm 2 passes)`.
    #[inline]
    pub(crate) fn sample(&self, u: f64) -> (bool, bool) {
        if u < self.p11 {
            (true, true)
        } else if u < self.p11 + self.p10 {
            (true, false)
        } else if u < self.p11 + self.p10 + self.p01 {
            (false, true)
        } else {
            (false, false)
        }
    }
}

/// Full joint outcome distribution for two polarizer angles.
pub fn joint_outcome_distribution(
    state: &EntangledState,
    a1: AnalyzerSetting,
    a2: AnalyzerSetting,
) -> Result<JointOutcome> {
    if a1.degrees().is_none() || a2.degrees().is_none() {
        return Err(Error::Invalid(
            "joint outcome distribution needs a polarizer angle on both arms",
        ));
    }
    passage_distribution(state, a1, a2)
}

/// Same as [`joint_outcome_distribution`] but a missing polarizer counts as
/// always passing.
pub(crate) fn passage_distribution(
    state: &EntangledState,
    a1: AnalyzerSetting,
    a2: AnalyzerSetting,
) -> Result<JointOutcome> {
    let p11 = coincidence_probability(state, a1, a2);
    let p10 = checked_nonnegative("p10", single_probability(state, a1, Side::One) - p11)?;
    let p01 = checked_nonnegative("p01", single_probability(state, a2, Side::Two) - p11)?;
    let p00 = checked_nonnegative("p00", 1.0 - p11 - p10 - p01)?;
    Ok(JointOutcome { p11, p10, p01, p00 })
}

fn checked_nonnegative(what: &'static str, value: f64) -> Result<f64> {
    if value < -JOINT_TOLERANCE {
        return Err(Error::Inconsistent { what, value });
    }
    Ok(if abs(value) <= JOINT_TOLERANCE && value < 0.0 {
        0.0
    } else {
        value
    })
}

#[inline]
fn clamp_unit(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}
