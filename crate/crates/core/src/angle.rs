//! Angle helpers shared by every module that manipulates headings.

use std::f64::consts::{PI, TAU};

/// Wraps an angle to the half-open interval (-π, π].
pub fn wrap(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

/// Signed smallest difference `a - b`, wrapped to (-π, π].
pub fn diff(a: f64, b: f64) -> f64 {
    wrap(a - b)
}

pub fn deg(d: f64) -> f64 {
    d.to_radians()
}
