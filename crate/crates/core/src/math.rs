//! `libm` shims so the rest of the crate reads like ordinary float code.

pub(crate) use core::f64::consts::{PI, TAU};

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// `x` reduced into `[0, period)`. Never returns `period` itself.
pub(crate) fn wrap(x: f64, period: f64) -> f64 {
    let mut r = libm::fmod(x, period);
    if r < 0.0 {
        r += period;
    }
    if r >= period {
        r -= period;
    }
    // fold -0.0 into +0.0
    r + 0.0
}

/// Shortest distance between two angles on a circle of circumference `period`.
pub(crate) fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = wrap(a - b, period);
    if d > period / 2.0 {
        period - d
    } else {
        d
    }
}

#[inline]
pub(crate) fn to_radians(deg: f64) -> f64 {
    deg * (PI / 180.0)
}

#[inline]
pub(crate) fn to_degrees(rad: f64) -> f64 {
    rad * (180.0 / PI)
}
