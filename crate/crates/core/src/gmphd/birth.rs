//! Birth intensity: road-anchored components at the sensor field-of-view
//! entry and components seeded from unexplained clusters of the previous
//! frame.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::GaussianComponent;
use crate::angle;
use crate::fusion::MeasurementCluster;
use crate::road::{RoadFrame, RoadSpline};
use crate::state::{ObjectState, StateMatrix, IDX_N, IDX_S, IDX_XI};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BirthConfig {
    /// Weight of each road-anchored component.
    pub road_weight: f64,
    /// Lateral offsets of the lanes (or branches) to seed, in metres.
    pub lane_offsets: Vec<f64>,
    /// Sensor field of view in degrees, centred on the vehicle x axis.
    pub fov_deg: f64,
    /// Sensor range in metres.
    pub max_range: f64,
    /// Road components sit this far inside the range limit.
    pub entry_margin: f64,
    /// Standard deviations of road components `[s, n, v, ξ, ξ̇, L, W]`.
    pub road_std: [f64; 7],
    pub measurement_weight: f64,
    /// Leftover clusters with fewer points do not seed births.
    pub min_points: usize,
    /// Standard deviations of measurement components; the velocity entry is
    /// replaced by `radar_speed_std` for clusters with radar velocity.
    pub measurement_std: [f64; 7],
    pub radar_speed_std: f64,
    pub prior_length: f64,
    pub prior_width: f64,
    /// Move measurement births from the visible surface to the expected
    /// object center along the line of sight.
    pub shift_to_center: bool,
}

impl Default for BirthConfig {
    fn default() -> Self {
        BirthConfig {
            road_weight: 0.02,
            lane_offsets: vec![0.0],
            fov_deg: 360.0,
            max_range: 60.0,
            entry_margin: 5.0,
            road_std: [5.0, 1.0, 5.0, 0.1, 0.05, 1.0, 0.3],
            measurement_weight: 0.1,
            min_points: 3,
            measurement_std: [1.0, 0.7, 5.0, 0.15, 0.05, 1.0, 0.3],
            radar_speed_std: 1.0,
            prior_length: 4.5,
            prior_width: 1.8,
            shift_to_center: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BirthModel {
    pub road_components: Vec<GaussianComponent>,
    pub measurement_components: Vec<GaussianComponent>,
}

impl BirthModel {
    pub fn components(&self) -> impl Iterator<Item = &GaussianComponent> {
        self.road_components.iter().chain(&self.measurement_components)
    }

    pub fn mass(&self) -> f64 {
        self.components().map(|c| c.weight).sum()
    }
}

fn diag(std: &[f64; 7]) -> StateMatrix {
    StateMatrix::from_diagonal(&std.map(|s| s * s).into())
}

/// Builds the birth model in road coordinates. Road components are placed
/// ahead of the ego at the range limit, and behind it as well when the field
/// of view covers the rear. Leftover clusters whose centroid cannot be
/// projected onto the road are skipped.
pub fn make_birth(frame: &RoadFrame<'_>, leftovers: &[MeasurementCluster], cfg: &BirthConfig) -> BirthModel {
    let ego = *frame.ego();
    let road = frame.road();
    let (lo, hi) = frame.extent();
    let reach = (cfg.max_range - cfg.entry_margin).max(0.0);
    let mut entries = vec![reach.min(hi)];
    if cfg.fov_deg > 180.0 {
        entries.push((-reach).max(lo));
    }
    let mut road_components = Vec::new();
    for &ds in &entries {
        let s = ego.s + ds;
        let Ok(hw) = road.half_width(s) else { continue };
        for &n in &cfg.lane_offsets {
            if n.abs() > hw {
                continue;
            }
            let st = ObjectState {
                s,
                n,
                v: ego.v.abs(),
                xi: 0.0,
                xi_rate: 0.0,
                length: cfg.prior_length,
                width: cfg.prior_width,
            };
            road_components.push(GaussianComponent::new(
                cfg.road_weight,
                st.to_vector(),
                diag(&cfg.road_std),
            ));
        }
    }

    let mut measurement_components = Vec::new();
    for cluster in leftovers.iter().filter(|c| c.len() >= cfg.min_points) {
        let c = cluster.centroid();
        let Some(foot) = frame.project(&c) else { continue };
        let s_c = ego.s + foot.s;
        let Ok(theta) = road.heading(s_c) else { continue };
        let road_dir = theta - ego.psi;
        let center = if cfg.shift_to_center && c.norm() > 1e-6 {
            let los = c / c.norm();
            let phi = los.y.atan2(los.x) - road_dir;
            let depth = 0.5 * cfg.prior_length * phi.cos().abs() + 0.5 * cfg.prior_width * phi.sin().abs();
            c + depth * los
        } else {
            c
        };
        let Some(pose) = frame.project(&center) else { continue };
        let s = ego.s + pose.s;
        let mut std = cfg.measurement_std;
        let (v, xi) = match cluster.velocity() {
            Some(vel) => {
                std[2] = cfg.radar_speed_std;
                let speed = vel.norm();
                let xi = if speed > 1.0 {
                    angle::wrap(vel.y.atan2(vel.x) - road_dir)
                } else {
                    0.0
                };
                // a direction opposite to the lane reads as reversing
                if xi.abs() > std::f64::consts::FRAC_PI_2 {
                    (-speed, angle::wrap(xi + std::f64::consts::PI))
                } else {
                    (speed, xi)
                }
            }
            None => (ego.v.abs(), 0.0),
        };
        let st = ObjectState {
            s,
            n: pose.n,
            v,
            xi,
            xi_rate: 0.0,
            length: cfg.prior_length,
            width: cfg.prior_width,
        };
        measurement_components.push(GaussianComponent::new(
            cfg.measurement_weight,
            st.to_vector(),
            diag(&std),
        ));
    }
    BirthModel {
        road_components,
        measurement_components,
    }
}

/// Re-expresses a road-coordinate component in the world-frame cartesian
/// parameterization (`s` → world x, `n` → world y, `ξ` → world yaw).
pub fn to_cartesian(comp: &GaussianComponent, road: &RoadSpline) -> Option<GaussianComponent> {
    let s = comp.mean[IDX_S];
    let n = comp.mean[IDX_N];
    let p: Vector2<f64> = road.global_point(s, n).ok()?;
    let theta = road.heading(s).ok()?;
    let mut mean = comp.mean;
    mean[IDX_S] = p.x;
    mean[IDX_N] = p.y;
    mean[IDX_XI] = angle::wrap(mean[IDX_XI] + theta);
    let mut rot = StateMatrix::identity();
    let (sin, cos) = theta.sin_cos();
    rot[(IDX_S, IDX_S)] = cos;
    rot[(IDX_S, IDX_N)] = -sin;
    rot[(IDX_N, IDX_S)] = sin;
    rot[(IDX_N, IDX_N)] = cos;
    Some(GaussianComponent::new(
        comp.weight,
        mean,
        rot * comp.cov * rot.transpose(),
    ))
}
