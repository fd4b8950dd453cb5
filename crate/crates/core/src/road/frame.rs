use nalgebra::Vector2;

use super::{yaw_from_road, CurvilinearPose, EgoPose, RoadError, RoadFrame};
use crate::state::ObjectState;

/// Maps the positional part of a filter state into the vehicle frame.
///
/// The curvilinear implementation is [`RoadFrame`]; [`CartesianFrame`] is the
/// baseline parameterization where the state lives in a fixed world frame
/// and the road reference reduces to a straight line along world `x`.
pub trait StateFrame: Sync {
    fn ego(&self) -> &EgoPose;

    fn position_to_vehicle(&self, s: f64, n: f64) -> Result<Vector2<f64>, RoadError>;

    fn vehicle_to_position(&self, p: &Vector2<f64>) -> Option<(f64, f64)>;

    /// Global heading of the reference line at state coordinate `s`.
    fn reference_heading(&self, s: f64) -> Result<f64, RoadError>;

    fn reference_curvature(&self, s: f64) -> Result<f64, RoadError>;

    /// Yaw and yaw rate of the state in the vehicle frame.
    fn yaw_to_vehicle(&self, state: &ObjectState) -> Result<(f64, f64), RoadError> {
        let theta = self.reference_heading(state.s)?;
        let kappa = self.reference_curvature(state.s)?;
        Ok(yaw_from_road(state, theta, kappa, self.ego()))
    }
}

impl StateFrame for RoadFrame<'_> {
    fn ego(&self) -> &EgoPose {
        RoadFrame::ego(self)
    }

    fn position_to_vehicle(&self, s: f64, n: f64) -> Result<Vector2<f64>, RoadError> {
        self.to_vehicle(&CurvilinearPose::new(s - RoadFrame::ego(self).s, n))
    }

    fn vehicle_to_position(&self, p: &Vector2<f64>) -> Option<(f64, f64)> {
        self.project(p).map(|c| (c.s + RoadFrame::ego(self).s, c.n))
    }

    fn reference_heading(&self, s: f64) -> Result<f64, RoadError> {
        self.road().heading(s)
    }

    fn reference_curvature(&self, s: f64) -> Result<f64, RoadError> {
        self.road().curvature(s)
    }
}

/// World-frame cartesian parameterization: `s` is world `x`, `n` world `y`,
/// `ξ` world yaw.
#[derive(Debug, Clone)]
pub struct CartesianFrame {
    ego: EgoPose,
    ego_world: Vector2<f64>,
    cos_psi: f64,
    sin_psi: f64,
}

impl CartesianFrame {
    pub fn new(ego: EgoPose, ego_world: Vector2<f64>) -> Self {
        CartesianFrame {
            cos_psi: ego.psi.cos(),
            sin_psi: ego.psi.sin(),
            ego,
            ego_world,
        }
    }
}

impl StateFrame for CartesianFrame {
    fn ego(&self) -> &EgoPose {
        &self.ego
    }

    fn position_to_vehicle(&self, s: f64, n: f64) -> Result<Vector2<f64>, RoadError> {
        let d = Vector2::new(s, n) - self.ego_world;
        Ok(Vector2::new(
            self.cos_psi * d.x + self.sin_psi * d.y,
            -self.sin_psi * d.x + self.cos_psi * d.y,
        ))
    }

    fn vehicle_to_position(&self, p: &Vector2<f64>) -> Option<(f64, f64)> {
        let w = Vector2::new(
            self.cos_psi * p.x - self.sin_psi * p.y,
            self.sin_psi * p.x + self.cos_psi * p.y,
        ) + self.ego_world;
        Some((w.x, w.y))
    }

    fn reference_heading(&self, _s: f64) -> Result<f64, RoadError> {
        Ok(0.0)
    }

    fn reference_curvature(&self, _s: f64) -> Result<f64, RoadError> {
        Ok(0.0)
    }
}
