//! Constant turn rate motion in road coordinates.

use serde::{Deserialize, Serialize};

use crate::angle;
use crate::state::{ObjectState, StateMatrix, IDX_LENGTH, IDX_N, IDX_S, IDX_V, IDX_WIDTH, IDX_XI, IDX_XI_RATE};

/// Yaw rates below this use the straight-line limit of the turn model.
pub const TURN_RATE_EPS: f64 = 1e-6;

/// Propagates `x` by `dt` with the constant turn rate model. Length and
/// width are unchanged.
pub fn predict_state(x: &ObjectState, dt: f64) -> ObjectState {
    let half_turn = 0.5 * x.xi_rate * dt;
    let mid = x.xi + half_turn;
    let dist = if x.xi_rate.abs() < TURN_RATE_EPS {
        x.v * dt
    } else {
        2.0 / x.xi_rate * x.v * half_turn.sin()
    };
    ObjectState {
        s: x.s + dist * mid.cos(),
        n: x.n + dist * mid.sin(),
        xi: angle::wrap(x.xi + x.xi_rate * dt),
        ..*x
    }
}

/// Additive process noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcessNoise {
    /// Longitudinal acceleration noise (m/s²).
    pub accel_std: f64,
    /// Yaw acceleration noise (rad/s²).
    pub yaw_accel_std: f64,
    /// Direct positional diffusion per step (m).
    pub position_std: f64,
    /// Extent random walk per step (m).
    pub extent_std: f64,
}

impl Default for ProcessNoise {
    fn default() -> Self {
        ProcessNoise {
            accel_std: 2.0,
            yaw_accel_std: 0.1,
            position_std: 0.05,
            extent_std: 0.02,
        }
    }
}

impl ProcessNoise {
    /// Covariance of the additive noise over an interval `dt`. Acceleration
    /// and yaw acceleration enter as piecewise-constant white noise on the
    /// `(s, v)` and `(ξ, ξ̇)` pairs.
    pub fn covariance(&self, dt: f64) -> StateMatrix {
        let mut q = StateMatrix::zeros();
        let (dt2, dt3, dt4) = (dt * dt, dt * dt * dt, dt * dt * dt * dt);
        let qa = self.accel_std.powi(2);
        let qw = self.yaw_accel_std.powi(2);
        let qp = self.position_std.powi(2);
        q[(IDX_S, IDX_S)] = 0.25 * dt4 * qa + qp;
        q[(IDX_S, IDX_V)] = 0.5 * dt3 * qa;
        q[(IDX_V, IDX_S)] = 0.5 * dt3 * qa;
        q[(IDX_V, IDX_V)] = dt2 * qa;
        q[(IDX_N, IDX_N)] = 0.25 * dt4 * qa + qp;
        q[(IDX_XI, IDX_XI)] = 0.25 * dt4 * qw;
        q[(IDX_XI, IDX_XI_RATE)] = 0.5 * dt3 * qw;
        q[(IDX_XI_RATE, IDX_XI)] = 0.5 * dt3 * qw;
        q[(IDX_XI_RATE, IDX_XI_RATE)] = dt2 * qw;
        q[(IDX_LENGTH, IDX_LENGTH)] = self.extent_std.powi(2);
        q[(IDX_WIDTH, IDX_WIDTH)] = self.extent_std.powi(2);
        q
    }
}
