//! Shipped scenarios, each paired with a filter configuration whose birth
//! and clutter settings match the sensor setup.

use super::{EgoSpec, Maneuver, ObstacleSpec, RoadSpec, ScenarioSpec, SensorSpec};
use crate::gmphd::FilterConfig;

pub const FIXTURE_NAMES: [&str; 4] = ["straight_follow", "curve_follow", "s_curve", "bifurcation"];

/// Lateral offset of the neighbouring lane.
const LANE: f64 = 3.5;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub spec: ScenarioSpec,
    pub filter: FilterConfig,
}

pub fn fixture(name: &str, seed: u64) -> Option<Fixture> {
    Some(match name {
        "straight_follow" => straight_follow(seed),
        "curve_follow" => curve_follow(seed),
        "s_curve" => s_curve(seed),
        "bifurcation" => bifurcation(seed),
        _ => return None,
    })
}

fn obstacle(s: f64, n: f64, speed: f64) -> ObstacleSpec {
    ObstacleSpec {
        s,
        n,
        speed,
        xi: 0.0,
        length: 4.8,
        width: 2.0,
        maneuvers: Vec::new(),
    }
}

/// Speed swings of ±3 m/s around the initial speed.
fn speed_changes() -> Vec<Maneuver> {
    [(5.0, 1.5), (12.0, -1.5), (18.0, -1.5), (24.0, 1.5)]
        .into_iter()
        .map(|(start, accel)| Maneuver::Accelerate {
            start,
            duration: 2.0,
            accel,
        })
        .collect()
}

/// Filter settings consistent with `spec`: birth geometry from the sensor
/// and clutter density from the visible road area.
pub fn matched_filter(spec: &ScenarioSpec, lane_offsets: Vec<f64>, half_width: f64) -> FilterConfig {
    let mut cfg = FilterConfig::default();
    let s = &spec.sensor;
    cfg.birth.fov_deg = s.fov_deg;
    cfg.birth.max_range = s.max_range;
    cfg.birth.lane_offsets = lane_offsets;
    cfg.sigma_r = s.lidar_noise.max(0.01);
    cfg.sigma_v = s.radar_velocity_noise.max(0.1);
    cfg.clutter_rate = s.clutter_rate.max(0.1);
    let visible = 2.0 * s.max_range * 2.0 * half_width * (s.fov_deg / 360.0);
    cfg.clutter_density = 1.0 / visible;
    cfg
}

/// Straight two-lane road; the ego slowly closes on an obstacle in the
/// adjacent lane, which is seen from behind and from the side.
pub fn straight_follow(seed: u64) -> Fixture {
    let spec = ScenarioSpec {
        name: "straight_follow".into(),
        seed,
        duration: 30.0,
        road: RoadSpec::CurvatureKnots {
            knots: vec![[0.0, 0.0], [1000.0, 0.0]],
            heading: 0.0,
            half_width: 7.0,
        },
        ego: EgoSpec {
            s: 20.0,
            n: 0.0,
            speed: 18.0,
            accel: 0.0,
        },
        obstacles: vec![obstacle(45.0, LANE, 17.5)],
        sensor: SensorSpec::default(),
    };
    let filter = matched_filter(&spec, vec![0.0, LANE], 7.0);
    Fixture { spec, filter }
}

/// Constant curvature `1/150` with the same lane layout as the straight
/// follow.
pub fn curve_follow(seed: u64) -> Fixture {
    let kappa = 1.0 / 150.0;
    let mut f = straight_follow(seed);
    f.spec.name = "curve_follow".into();
    f.spec.road = RoadSpec::CurvatureKnots {
        knots: vec![[0.0, kappa], [800.0, kappa]],
        heading: 0.0,
        half_width: 7.0,
    };
    f
}

/// Chicane-like road: alternating arcs of curvature ±0.02 joined by
/// clothoid transitions, with a single obstacle ahead in the ego lane.
pub fn s_curve(seed: u64) -> Fixture {
    let k = 0.02;
    let mut knots = vec![[0.0, 0.0]];
    let mut s = 60.0;
    knots.push([s, 0.0]);
    while s < 880.0 {
        // left arc, reversal, right arc, straight
        for (ds, kappa) in [(30.0, k), (50.0, k), (30.0, -k), (50.0, -k), (30.0, 0.0), (40.0, 0.0)] {
            s += ds;
            knots.push([s, kappa]);
        }
    }
    let spec = ScenarioSpec {
        name: "s_curve".into(),
        seed,
        duration: 30.0,
        road: RoadSpec::CurvatureKnots {
            knots,
            heading: 0.0,
            half_width: 4.0,
        },
        ego: EgoSpec {
            s: 20.0,
            n: 0.0,
            speed: 18.0,
            accel: 0.0,
        },
        obstacles: vec![ObstacleSpec {
            maneuvers: speed_changes(),
            ..obstacle(40.0, 0.0, 18.0)
        }],
        sensor: SensorSpec::default(),
    };
    let filter = matched_filter(&spec, vec![0.0], 4.0);
    Fixture { spec, filter }
}

/// Wide road splitting into two branches at lateral offsets ±5 m, seen by a
/// forward sensor. Two slower obstacles, one per branch, enter the field of
/// view at the range limit.
pub fn bifurcation(seed: u64) -> Fixture {
    let spec = ScenarioSpec {
        name: "bifurcation".into(),
        seed,
        duration: 8.0,
        road: RoadSpec::CurvatureKnots {
            knots: vec![[0.0, 0.0], [600.0, 0.0]],
            heading: 0.0,
            half_width: 9.0,
        },
        ego: EgoSpec {
            s: 20.0,
            n: 0.0,
            speed: 18.0,
            accel: 0.0,
        },
        obstacles: vec![obstacle(95.0, 5.0, 10.0), obstacle(110.0, -5.0, 10.0)],
        sensor: SensorSpec {
            fov_deg: 120.0,
            ..SensorSpec::default()
        },
    };
    let filter = matched_filter(&spec, vec![-5.0, 5.0], 9.0);
    Fixture { spec, filter }
}
