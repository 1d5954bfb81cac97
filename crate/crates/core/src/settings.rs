//! Polarizer settings. Angles are degrees, canonicalized to `[0, 180)` because
//! a polarizer axis is π-periodic.

use core::fmt;

use crate::math::{to_radians, wrap};
use crate::{Error, Result};

/// Setting of one analyzer: a polarizer at some angle, or no polarizer at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyzerSetting {
    /// Polarizer transmission axis in degrees from horizontal.
    Angle(f64),
    /// Polarizer removed; every photon reaches the detector.
    NoPolarizer,
}

impl AnalyzerSetting {
    /// A polarizer at `degrees`, reduced into `[0, 180)`.
    pub fn angle(degrees: f64) -> Result<Self> {
        Ok(AnalyzerSetting::Angle(canonical_degrees(degrees)?))
    }

    pub fn degrees(self) -> Option<f64> {
        match self {
            AnalyzerSetting::Angle(d) => Some(d),
            AnalyzerSetting::NoPolarizer => None,
        }
    }

    pub(crate) fn radians(self) -> Option<f64> {
        self.degrees().map(to_radians)
    }
}

impl fmt::Display for AnalyzerSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyzerSetting::Angle(d) => write!(f, "{d}"),
            AnalyzerSetting::NoPolarizer => f.write_str("inf"),
        }
    }
}

pub(crate) fn canonical_degrees(degrees: f64) -> Result<f64> {
    if !degrees.is_finite() {
        return Err(Error::domain("angle", degrees, "a finite number of degrees"));
    }
    Ok(wrap(degrees, 180.0))
}

/// The four analyzer angles of one CH run: `theta1`, `theta1_prime` on arm 1
/// and `theta2`, `theta2_prime` on arm 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingsQuad {
    pub theta1: f64,
    pub theta1_prime: f64,
    pub theta2: f64,
    pub theta2_prime: f64,
}

impl SettingsQuad {
    pub fn new(theta1: f64, theta1_prime: f64, theta2: f64, theta2_prime: f64) -> Result<Self> {
        Ok(SettingsQuad {
            theta1: canonical_degrees(theta1)?,
            theta1_prime: canonical_degrees(theta1_prime)?,
            theta2: canonical_degrees(theta2)?,
            theta2_prime: canonical_degrees(theta2_prime)?,
        })
    }

    /// `[theta1, theta1_prime, theta2, theta2_prime]`, the order used by every
    /// external interface.
    pub fn from_array(angles: [f64; 4]) -> Result<Self> {
        Self::new(angles[0], angles[1], angles[2], angles[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.theta1, self.theta1_prime, self.theta2, self.theta2_prime]
    }

    pub(crate) fn radians(self) -> [f64; 4] {
        self.to_array().map(to_radians)
    }

    /// The six analyzer configurations entering the CH sum, in the order
    /// `(θ1,θ2) (θ1,θ2') (θ1',θ2) (θ1',θ2') (θ1',∞) (∞,θ2)`.
    pub fn cells(self) -> [(AnalyzerSetting, AnalyzerSetting); 6] {
        use AnalyzerSetting::{Angle, NoPolarizer};
        [
            (Angle(self.theta1), Angle(self.theta2)),
            (Angle(self.theta1), Angle(self.theta2_prime)),
            (Angle(self.theta1_prime), Angle(self.theta2)),
            (Angle(self.theta1_prime), Angle(self.theta2_prime)),
            (Angle(self.theta1_prime), NoPolarizer),
            (NoPolarizer, Angle(self.theta2)),
        ]
    }
}

impl fmt::Display for SettingsQuad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.theta1, self.theta1_prime, self.theta2, self.theta2_prime
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_wrap_into_half_turn() {
        assert_eq!(AnalyzerSetting::angle(180.0).unwrap(), AnalyzerSetting::Angle(0.0));
        assert_eq!(AnalyzerSetting::angle(-45.0).unwrap(), AnalyzerSetting::Angle(135.0));
        assert_eq!(AnalyzerSetting::angle(-0.0).unwrap().degrees(), Some(0.0));
        assert!((AnalyzerSetting::angle(432.24).unwrap().degrees().unwrap() - 72.24).abs() < 1e-12);
        let tiny = AnalyzerSetting::angle(-1e-18).unwrap().degrees().unwrap();
        assert!((0.0..180.0).contains(&tiny));
    }

    #[test]
    fn non_finite_angle_is_rejected() {
        assert!(AnalyzerSetting::angle(f64::NAN).is_err());
        assert!(SettingsQuad::new(0.0, f64::INFINITY, 0.0, 0.0).is_err());
    }

    #[test]
    fn cells_follow_ch_order() {
        let q = SettingsQuad::new(72.24, 17.76, 45.0, 0.0).unwrap();
        let cells = q.cells();
        assert_eq!(cells[1].1, AnalyzerSetting::Angle(0.0));
        assert_eq!(cells[4], (AnalyzerSetting::Angle(17.76), AnalyzerSetting::NoPolarizer));
        assert_eq!(cells[5], (AnalyzerSetting::NoPolarizer, AnalyzerSetting::Angle(45.0)));
    }
}
