//! Point filters applied to each lidar frame before clustering: removal of
//! points outside the road bounds, and a bearing filter that keeps only the
//! closest return in each angular bin so that interior returns are dropped.

use std::collections::BTreeMap;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::road::RoadFrame;

/// 2D lidar return in the vehicle frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarPoint {
    pub x: f64,
    pub y: f64,
}

impl LidarPoint {
    pub fn new(x: f64, y: f64) -> Self {
        LidarPoint { x, y }
    }

    pub fn pos(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn bearing(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn range(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Radar object detection: position and absolute velocity, both expressed
/// in the vehicle frame axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarDetection {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl RadarDetection {
    pub const MAX_SPEED: f64 = 100.0;

    pub fn pos(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.vx, self.vy].iter().all(|v| v.is_finite()) && self.vx.hypot(self.vy) < Self::MAX_SPEED
    }
}

pub const DEFAULT_ANGULAR_BIN: f64 = 0.5 * std::f64::consts::PI / 180.0;

/// Keeps the points whose projection onto the centerline lies within the
/// local road half-width. Points that cannot be projected are dropped.
pub fn filter_road_bounds(points: &[LidarPoint], frame: &RoadFrame<'_>) -> Vec<LidarPoint> {
    let road = frame.road();
    let s_ego = frame.ego().s;
    points
        .iter()
        .filter(|p| {
            p.x.is_finite()
                && p.y.is_finite()
                && frame
                    .project(&p.pos())
                    .is_some_and(|c| road.half_width(s_ego + c.s).is_ok_and(|hw| c.n.abs() <= hw))
        })
        .copied()
        .collect()
}

/// Bins points by bearing (bin width `angular_bin`) and keeps the closest
/// point of every bin; ties go to the smaller bearing. Survivors keep their
/// input order.
pub fn visibility_filter(points: &[LidarPoint], angular_bin: f64) -> Vec<LidarPoint> {
    assert!(angular_bin > 0.0, "angular bin must be positive");
    let mut best: BTreeMap<i64, (usize, f64, f64)> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let bearing = p.bearing();
        let bin = (bearing / angular_bin).floor() as i64;
        let range = p.range();
        let replace = match best.get(&bin) {
            None => true,
            Some(&(_, r, b)) => range < r || (range == r && bearing < b),
        };
        if replace {
            best.insert(bin, (i, range, bearing));
        }
    }
    let mut keep: Vec<usize> = best.values().map(|v| v.0).collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| points[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::{ConversionConfig, EgoPose, RoadSpline};

    #[test]
    fn empty_in_empty_out() {
        let road = RoadSpline::straight(200.0, 0.0, 4.0).unwrap();
        let ego = EgoPose::on_road(&road, 50.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let frame = RoadFrame::new(&road, ego, &ConversionConfig::default()).unwrap();
        assert!(filter_road_bounds(&[], &frame).is_empty());
        assert!(visibility_filter(&[], DEFAULT_ANGULAR_BIN).is_empty());
    }

    #[test]
    fn road_bound_threshold() {
        let road = RoadSpline::straight(200.0, 0.0, 4.0).unwrap();
        let ego = EgoPose::on_road(&road, 50.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let frame = RoadFrame::new(&road, ego, &ConversionConfig::default()).unwrap();
        let pts: Vec<_> = [-4.1, -3.9, 0.0, 3.9, 4.1]
            .iter()
            .map(|&n| LidarPoint::new(10.0, n))
            .collect();
        let kept = filter_road_bounds(&pts, &frame);
        let ns: Vec<f64> = kept.iter().map(|p| p.y).collect();
        assert_eq!(ns, vec![-3.9, 0.0, 3.9]);
    }

    #[test]
    fn closest_point_per_bearing_survives() {
        let pts = vec![LidarPoint::new(8.0, 0.8), LidarPoint::new(5.0, 0.5)];
        assert_eq!(visibility_filter(&pts, DEFAULT_ANGULAR_BIN), vec![pts[1]]);
    }

    #[test]
    fn distinct_bins_pass_through() {
        let pts: Vec<_> = (0..20)
            .map(|i| {
                let b = (i as f64 * 2.0 - 20.0).to_radians() + 0.001;
                LidarPoint::new(10.0 * b.cos(), 10.0 * b.sin())
            })
            .collect();
        assert_eq!(visibility_filter(&pts, DEFAULT_ANGULAR_BIN), pts);
    }

    #[test]
    fn tie_prefers_smaller_bearing() {
        let a = LidarPoint::new(3.0, 4.0);
        let b = LidarPoint::new(4.0, 3.0);
        assert_eq!(visibility_filter(&[a, b], 1.0), vec![b]);
        assert_eq!(visibility_filter(&[b, a], 1.0), vec![b]);
    }

    #[test]
    fn radar_sanity_bound() {
        let ok = RadarDetection {
            x: 1.0,
            y: 0.0,
            vx: 20.0,
            vy: 1.0,
        };
        let bad = RadarDetection { vx: 150.0, ..ok };
        assert!(ok.is_valid() && !bad.is_valid());
    }
}
