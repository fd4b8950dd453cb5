//! Sensor models: ray-cast lidar, Poisson road clutter and object-level
//! radar.

use nalgebra::Vector2;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{SensorSpec, TruthObject, WorldPose};
use crate::meas_model::OrientedRectangle;
use crate::preprocess::{LidarPoint, RadarDetection};
use crate::road::{EgoPose, RoadSpline};

/// Ground truth of a lidar return: the object hit and the exact surface
/// point before noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceLabel {
    pub object: usize,
    pub x: f64,
    pub y: f64,
}

fn rectangle(t: &TruthObject) -> OrientedRectangle {
    OrientedRectangle {
        center: Vector2::new(t.vehicle.x, t.vehicle.y),
        yaw: t.vehicle.yaw,
        length: t.vehicle.length,
        width: t.vehicle.width,
    }
}

/// Distance along the unit ray `dir` from the origin to segment `a`-`b`.
fn ray_segment(dir: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> Option<f64> {
    let e = b - a;
    let den = dir.x * e.y - dir.y * e.x;
    if den.abs() < 1e-12 {
        return None;
    }
    let t = (a.x * e.y - a.y * e.x) / den;
    let u = (a.x * dir.y - a.y * dir.x) / den;
    (t > 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
}

/// Nearest intersection of a ray with the truth rectangles, as
/// `(object index, range)`.
pub(crate) fn cast(dir: &Vector2<f64>, rects: &[(usize, [Vector2<f64>; 4])], max_range: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (id, c) in rects {
        for k in 0..4 {
            if let Some(t) = ray_segment(dir, &c[k], &c[(k + 1) % 4]) {
                if t <= max_range && best.is_none_or(|(_, b)| t < b) {
                    best = Some((*id, t));
                }
            }
        }
    }
    best
}

fn ray_angles(sensor: &SensorSpec) -> Vec<f64> {
    let res = sensor.angular_res_deg.to_radians();
    if sensor.fov_deg >= 360.0 {
        let n = (std::f64::consts::TAU / res).round() as usize;
        (0..n).map(|k| -std::f64::consts::PI + k as f64 * res).collect()
    } else {
        let half = 0.5 * sensor.fov_deg.to_radians();
        let n = (2.0 * half / res).floor() as usize;
        (0..=n).map(|k| -half + k as f64 * res).collect()
    }
}

/// Casts one ray per angular step over the field of view and returns the
/// noisy first hits with their surface labels.
pub fn raycast_lidar(
    truths: &[TruthObject],
    sensor: &SensorSpec,
    rng: &mut ChaCha8Rng,
) -> (Vec<LidarPoint>, Vec<Option<SurfaceLabel>>) {
    let rects: Vec<(usize, [Vector2<f64>; 4])> = truths
        .iter()
        .enumerate()
        .filter(|(_, t)| t.vehicle.x.hypot(t.vehicle.y) <= sensor.max_range + t.vehicle.length + t.vehicle.width)
        .map(|(i, t)| (i, rectangle(t).corners()))
        .collect();
    let noise = Normal::new(0.0, sensor.lidar_noise.max(0.0)).expect("finite noise");
    let mut points = Vec::new();
    let mut labels = Vec::new();
    if rects.is_empty() {
        return (points, labels);
    }
    for a in ray_angles(sensor) {
        let dir = Vector2::new(a.cos(), a.sin());
        if let Some((i, r)) = cast(&dir, &rects, sensor.max_range) {
            let hit = dir * r;
            let (nx, ny) = if sensor.lidar_noise > 0.0 {
                (noise.sample(rng), noise.sample(rng))
            } else {
                (0.0, 0.0)
            };
            points.push(LidarPoint::new(hit.x + nx, hit.y + ny));
            labels.push(Some(SurfaceLabel {
                object: truths[i].id,
                x: hit.x,
                y: hit.y,
            }));
        }
    }
    (points, labels)
}

/// Poisson clutter spread uniformly over the road surface around the ego,
/// kept only where the sensor can see.
pub fn gen_clutter(
    road: &RoadSpline,
    ego: &EgoPose,
    ego_world: &WorldPose,
    sensor: &SensorSpec,
    rng: &mut ChaCha8Rng,
) -> Vec<LidarPoint> {
    if sensor.clutter_rate <= 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(sensor.clutter_rate).expect("positive rate").sample(rng) as usize;
    let r = sensor.max_range;
    let mut out = Vec::new();
    for _ in 0..count {
        let s = ego.s + rng.random_range(-r..r);
        let u: f64 = rng.random_range(-1.0..1.0);
        let Ok(hw) = road.half_width(s) else { continue };
        let Ok(p) = road.global_point(s, u * hw) else { continue };
        let v = ego_world.to_vehicle(&p);
        if sensor.covers(&v) {
            out.push(LidarPoint::new(v.x, v.y));
        }
    }
    out
}

/// One detection per visible truth object, dropped with probability
/// `1 − P_D`. Velocities are absolute, expressed in vehicle axes.
pub fn gen_radar(
    truths: &[TruthObject],
    ego_world: &WorldPose,
    sensor: &SensorSpec,
    rng: &mut ChaCha8Rng,
) -> Vec<RadarDetection> {
    let pos_noise = Normal::new(0.0, sensor.radar_position_noise.max(0.0)).expect("finite noise");
    let vel_noise = Normal::new(0.0, sensor.radar_velocity_noise.max(0.0)).expect("finite noise");
    let mut out = Vec::new();
    for t in truths {
        let p = Vector2::new(t.vehicle.x, t.vehicle.y);
        if !sensor.covers(&p) {
            continue;
        }
        if !rng.random_bool(sensor.radar_detection_prob) {
            continue;
        }
        let rel_yaw = t.world.yaw - ego_world.yaw;
        let v = t.state.v;
        out.push(RadarDetection {
            x: p.x + pos_noise.sample(rng),
            y: p.y + pos_noise.sample(rng),
            vx: v * rel_yaw.cos() + vel_noise.sample(rng),
            vy: v * rel_yaw.sin() + vel_noise.sample(rng),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::PlanarObject;
    use crate::state::ObjectState;
    use rand::SeedableRng;

    fn truth(id: usize, x: f64, y: f64, yaw: f64) -> TruthObject {
        let obj = PlanarObject {
            x,
            y,
            yaw,
            length: 4.0,
            width: 2.0,
        };
        TruthObject {
            id,
            state: ObjectState {
                s: x,
                n: y,
                v: 10.0,
                xi: yaw,
                xi_rate: 0.0,
                length: 4.0,
                width: 2.0,
            },
            world: obj,
            vehicle: obj,
            on_road: true,
        }
    }

    fn quiet() -> SensorSpec {
        SensorSpec {
            lidar_noise: 0.0,
            clutter_rate: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn axis_aligned_hit_range() {
        let t = truth(0, 20.0, 0.0, 0.0);
        let rects = vec![(0, rectangle(&t).corners())];
        let (i, r) = cast(&Vector2::new(1.0, 0.0), &rects, 60.0).unwrap();
        assert_eq!(i, 0);
        assert!((r - 18.0).abs() < 1e-12);
        // oblique ray onto the rear face x = 18
        let a: f64 = 0.02;
        let (_, r) = cast(&Vector2::new(a.cos(), a.sin()), &rects, 60.0).unwrap();
        assert!((r - 18.0 / a.cos()).abs() < 1e-9);
        assert!(cast(&Vector2::new(0.0, 1.0), &rects, 60.0).is_none());
        assert!(cast(&Vector2::new(1.0, 0.0), &rects, 10.0).is_none());
    }

    #[test]
    fn hits_match_parametric_oracle() {
        // oracle: march along the ray and find the first point inside
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let t = truth(
                0,
                rng.random_range(5.0..30.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-3.0..3.0),
            );
            let rect = rectangle(&t);
            let rects = vec![(0, rect.corners())];
            let a = (t.vehicle.y.atan2(t.vehicle.x)) + rng.random_range(-0.05..0.05);
            let dir = Vector2::new(a.cos(), a.sin());
            let mut first = None;
            let mut r = 0.0;
            while r < 60.0 {
                if rect.contains(&(dir * r)) {
                    first = Some(r);
                    break;
                }
                r += 1e-3;
            }
            match (cast(&dir, &rects, 60.0), first) {
                (Some((_, got)), Some(want)) => assert!((got - want).abs() < 2e-3, "{got} {want}"),
                (None, None) => {}
                (g, w) => panic!("mismatch {g:?} {w:?}"),
            }
        }
    }

    #[test]
    fn near_object_occludes_far() {
        let truths = vec![truth(0, 15.0, 0.0, 0.0), truth(1, 30.0, 0.0, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (pts, labels) = raycast_lidar(&truths, &quiet(), &mut rng);
        assert!(!pts.is_empty());
        // the far object is narrower in bearing than the near one
        assert!(labels.iter().all(|l| l.unwrap().object == 0));
        let truths = vec![truth(0, 15.0, 0.0, 0.0), truth(1, 30.0, 5.0, 0.0)];
        let (_, labels) = raycast_lidar(&truths, &quiet(), &mut rng);
        assert!(labels.iter().any(|l| l.unwrap().object == 1));
    }

    #[test]
    fn fov_limits_rays() {
        let sensor = SensorSpec {
            fov_deg: 90.0,
            ..quiet()
        };
        let truths = vec![truth(0, -20.0, 0.0, 0.0), truth(1, 0.0, 20.0, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (pts, _) = raycast_lidar(&truths, &sensor, &mut rng);
        assert!(pts.is_empty());
        assert!(gen_radar(
            &truths,
            &WorldPose {
                x: 0.0,
                y: 0.0,
                yaw: 0.0
            },
            &sensor,
            &mut rng
        )
        .is_empty());
    }

    #[test]
    fn radar_velocity_noise_statistics() {
        let sensor = SensorSpec {
            radar_detection_prob: 1.0,
            radar_velocity_noise: 0.5,
            ..quiet()
        };
        let truths = vec![truth(0, 20.0, 0.0, 0.3)];
        let ego = WorldPose {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let d = gen_radar(&truths, &ego, &sensor, &mut rng)[0];
            let e = d.vx - 10.0 * 0.3f64.cos();
            sum += e;
            sq += e * e;
        }
        let mean = sum / n as f64;
        let std = (sq / n as f64 - mean * mean).sqrt();
        assert!(mean.abs() < 0.02);
        assert!((std - 0.5).abs() / 0.5 < 0.03, "{std}");
    }

    #[test]
    fn radar_drop_rate() {
        let sensor = SensorSpec {
            radar_detection_prob: 0.7,
            ..quiet()
        };
        let truths = vec![truth(0, 20.0, 0.0, 0.0)];
        let ego = WorldPose {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hits: usize = (0..10_000)
            .map(|_| gen_radar(&truths, &ego, &sensor, &mut rng).len())
            .sum();
        assert!((hits as f64 / 10_000.0 - 0.7).abs() < 0.02);
    }

    #[test]
    fn clutter_stays_on_road_and_in_view() {
        let road = RoadSpline::straight(500.0, 0.0, 5.0).unwrap();
        let ego = EgoPose::on_road(&road, 100.0, 0.0, 0.0, 0.0, 10.0).unwrap();
        let world = WorldPose {
            x: 100.0,
            y: 0.0,
            yaw: 0.0,
        };
        let sensor = SensorSpec {
            clutter_rate: 50.0,
            fov_deg: 120.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = gen_clutter(&road, &ego, &world, &sensor, &mut rng);
        assert!(!pts.is_empty());
        for p in pts {
            assert!(p.y.abs() <= 5.0 + 1e-9);
            assert!(sensor.covers(&p.pos()));
        }
    }
}
