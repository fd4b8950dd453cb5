//! Road centerline model and conversions between curvilinear road
//! coordinates and the cartesian vehicle reference frame.
//!
//! Conventions: the vehicle frame has `x` forward and `y` to the left of the
//! ego vehicle, with the sensor at the origin. Lateral offsets `n` are
//! positive to the left of the road's travel direction. Headings are global
//! angles measured counter-clockwise from the global `x` axis.

mod convert;
mod frame;
mod spline;

pub use convert::{cart_to_curv, curv_to_cart, ConversionConfig, RoadFrame};
pub use frame::{CartesianFrame, StateFrame};
pub use spline::{RoadSegment, RoadSpline};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle;
use crate::state::ObjectState;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RoadError {
    #[error("arclength s={s} outside road extent [{min}, {max}]")]
    OutOfRange { s: f64, min: f64, max: f64 },
    #[error("heading jumps by {jump:.3e} rad at segment joint {joint}")]
    HeadingDiscontinuity { joint: usize, jump: f64 },
    #[error("invalid road map: {0}")]
    InvalidMap(String),
    #[error("conversion step must be positive, got {0}")]
    InvalidStep(f64),
}

/// Relative curvilinear pose used by the conversions: `s` is measured from
/// the ego foot point (negative behind the ego).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvilinearPose {
    pub s: f64,
    pub n: f64,
    pub heading_offset: f64,
}

impl CurvilinearPose {
    pub fn new(s: f64, n: f64) -> Self {
        CurvilinearPose {
            s,
            n,
            heading_offset: 0.0,
        }
    }
}

/// Ego localization on the road.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoPose {
    /// Arclength of the ego foot point.
    pub s: f64,
    /// Lateral offset of the ego from the centerline.
    pub n: f64,
    /// Heading relative to the road tangent.
    pub xi: f64,
    /// Global yaw, `θ(s) + ξ`.
    pub psi: f64,
    pub psi_rate: f64,
    pub v: f64,
}

impl EgoPose {
    /// Builds a pose on `road`, deriving the global yaw from the road heading.
    pub fn on_road(road: &RoadSpline, s: f64, n: f64, xi: f64, psi_rate: f64, v: f64) -> Result<Self, RoadError> {
        let th = road.heading(s)?;
        Ok(EgoPose {
            s,
            n,
            xi: angle::wrap(xi),
            psi: angle::wrap(th + xi),
            psi_rate,
            v,
        })
    }
}

/// Object yaw and yaw rate relative to the vehicle frame:
/// `ψ = ξ + θ_o − ψ_e`, `ψ̇ = ξ̇ + κ_o·v·cos ξ − ψ̇_e`, with the road
/// quantities taken at the object's foot point.
pub fn yaw_to_vrf(state: &ObjectState, road: &RoadSpline, ego: &EgoPose) -> Result<(f64, f64), RoadError> {
    let theta = road.heading(state.s)?;
    let kappa = road.curvature(state.s)?;
    Ok(yaw_from_road(state, theta, kappa, ego))
}

pub(crate) fn yaw_from_road(state: &ObjectState, theta: f64, kappa: f64, ego: &EgoPose) -> (f64, f64) {
    let psi = angle::wrap(state.xi + theta - ego.psi);
    let psi_rate = state.xi_rate + kappa * state.v * state.xi.cos() - ego.psi_rate;
    (psi, psi_rate)
}
