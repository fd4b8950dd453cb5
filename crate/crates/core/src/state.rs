//! Track state in road-aligned curvilinear coordinates.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::angle;

pub const STATE_DIM: usize = 7;
pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;

pub const IDX_S: usize = 0;
pub const IDX_N: usize = 1;
pub const IDX_V: usize = 2;
pub const IDX_XI: usize = 3;
pub const IDX_XI_RATE: usize = 4;
pub const IDX_LENGTH: usize = 5;
pub const IDX_WIDTH: usize = 6;

/// `[s, n, v, ξ, ξ̇, L, W]`.
///
/// `s` is the arclength of the object's foot point along the road, measured
/// from the start of the road map; `n` is the signed lateral offset, positive
/// to the left of the travel direction. `ξ` and `ξ̇` are yaw and yaw rate
/// relative to the local road tangent. In the cartesian baseline the same
/// slots carry world `x`, `y` and world yaw/yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub s: f64,
    pub n: f64,
    pub v: f64,
    pub xi: f64,
    pub xi_rate: f64,
    pub length: f64,
    pub width: f64,
}

impl ObjectState {
    pub fn to_vector(&self) -> StateVector {
        StateVector::from([self.s, self.n, self.v, self.xi, self.xi_rate, self.length, self.width])
    }

    pub fn from_vector(x: &StateVector) -> Self {
        ObjectState {
            s: x[IDX_S],
            n: x[IDX_N],
            v: x[IDX_V],
            xi: angle::wrap(x[IDX_XI]),
            xi_rate: x[IDX_XI_RATE],
            length: x[IDX_LENGTH],
            width: x[IDX_WIDTH],
        }
    }
}
