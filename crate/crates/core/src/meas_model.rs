//! Rectangle measurement model.
//!
//! A predicted state is turned into an oriented rectangle in the vehicle
//! frame. The cluster points, sorted counter-clockwise by bearing, are
//! associated with one visible side (or split at a corner into two runs on
//! two sides), and one measurement-generating point per measured point is
//! placed along the associated side over the measured span: at the
//! projection of the measured point, evenly in bearing from the sensor, or
//! evenly in arclength. The
//! predicted points keep the cluster's order, so no point-to-point
//! association is needed and the likelihood is a single Gaussian over the
//! concatenated vectors.
//!
//! Sides are numbered 1 = front, 2 = left, 3 = rear, 4 = right; `α_i` is the
//! angle of the side's inward normal. Measurements spread along a side seen
//! from outside run at angle `β` with `α_i − β + π/2 ≈ 0`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Range;

use nalgebra::{DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::angle;
use crate::fusion::MeasurementCluster;
use crate::road::{RoadError, StateFrame};
use crate::state::ObjectState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRectangle {
    pub center: Vector2<f64>,
    pub yaw: f64,
    pub length: f64,
    pub width: f64,
}

/// Geometry of one rectangle side: midpoint, unit tangent, half length.
#[derive(Debug, Clone, Copy)]
pub struct Side {
    pub midpoint: Vector2<f64>,
    pub tangent: Vector2<f64>,
    pub half_length: f64,
    pub inward_normal: f64,
}

impl Side {
    fn coordinate(&self, p: &Vector2<f64>) -> f64 {
        (p - self.midpoint).dot(&self.tangent)
    }

    fn at(&self, t: f64) -> Vector2<f64> {
        self.midpoint + t * self.tangent
    }

    /// Distance from `p` to the side segment.
    pub fn distance(&self, p: &Vector2<f64>) -> f64 {
        let t = self.coordinate(p).clamp(-self.half_length, self.half_length);
        (p - self.at(t)).norm()
    }
}

impl OrientedRectangle {
    /// Rectangle of `state` in the vehicle frame.
    pub fn from_state(state: &ObjectState, frame: &dyn StateFrame) -> Result<Self, RoadError> {
        let center = frame.position_to_vehicle(state.s, state.n)?;
        let (yaw, _) = frame.yaw_to_vehicle(state)?;
        Ok(OrientedRectangle {
            center,
            yaw,
            length: state.length.abs().max(1e-3),
            width: state.width.abs().max(1e-3),
        })
    }

    fn axes(&self) -> (Vector2<f64>, Vector2<f64>) {
        let fwd = Vector2::new(self.yaw.cos(), self.yaw.sin());
        (fwd, Vector2::new(-fwd.y, fwd.x))
    }

    /// Side `index` in 1..=4.
    pub fn side(&self, index: usize) -> Side {
        let (fwd, left) = self.axes();
        let (hl, hw) = (0.5 * self.length, 0.5 * self.width);
        let (offset, tangent, half_length) = match index {
            1 => (hl * fwd, left, hw),
            2 => (hw * left, -fwd, hl),
            3 => (-hl * fwd, -left, hw),
            4 => (-hw * left, fwd, hl),
            _ => panic!("side index {index} out of 1..=4"),
        };
        Side {
            midpoint: self.center + offset,
            tangent,
            half_length,
            inward_normal: normal_angle(self.yaw, index),
        }
    }

    /// Corners, counter-clockwise starting front-left.
    pub fn corners(&self) -> [Vector2<f64>; 4] {
        let (fwd, left) = self.axes();
        let (hl, hw) = (0.5 * self.length, 0.5 * self.width);
        [
            self.center + hl * fwd + hw * left,
            self.center - hl * fwd + hw * left,
            self.center - hl * fwd - hw * left,
            self.center + hl * fwd - hw * left,
        ]
    }

    /// Distance from `p` to the rectangle boundary.
    pub fn boundary_distance(&self, p: &Vector2<f64>) -> f64 {
        (1..=4).map(|i| self.side(i).distance(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        let (fwd, left) = self.axes();
        let d = p - self.center;
        d.dot(&fwd).abs() <= 0.5 * self.length && d.dot(&left).abs() <= 0.5 * self.width
    }
}

/// Inward normal angle of side `index` for a rectangle with yaw `yaw`.
pub fn normal_angle(yaw: f64, index: usize) -> f64 {
    angle::wrap(yaw + PI + (index as f64 - 1.0) * FRAC_PI_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideAssociation {
    pub side_index: usize,
    pub normal_angle: f64,
    /// Fraction of the side covered by the projected measurements, in (0, 1].
    pub span_fraction: f64,
}

/// Corner split of a sorted cluster: the first `split` points form one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerSplit {
    pub split: usize,
    pub is_two_sided: bool,
    pub single_sse: f64,
    pub two_line_sse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeConfig {
    /// Two-sided when the two-line residual is below this fraction of the
    /// single-line residual.
    pub two_sided_ratio: f64,
    /// Minimum angle subtended by the cluster at the rectangle center for a
    /// two-sided verdict (rad).
    pub two_sided_min_span: f64,
    pub spacing: PointSpacing,
}

/// How the predicted points of a run are distributed over the measured span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PointSpacing {
    /// Each measured point projected onto the side, clamped to its ends.
    #[default]
    Projection,
    /// Equal bearing steps seen from the sensor at the origin.
    Bearing,
    /// Equal steps along the side.
    Arclength,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        ShapeConfig {
            two_sided_ratio: 0.5,
            two_sided_min_span: 30f64.to_radians(),
            spacing: PointSpacing::default(),
        }
    }
}

/// Sorts the cluster counter-clockwise by bearing from the sensor origin,
/// ties ordered by range. A cluster that lies within a half-plane but
/// straddles the ±π bearing cut is rotated so that it starts after its
/// largest angular gap and stays contiguous.
pub fn sort_ccw(cluster: MeasurementCluster) -> MeasurementCluster {
    let keys: Vec<(f64, f64)> = cluster.points().iter().map(|p| (p.y.atan2(p.x), p.norm())).collect();
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].0.total_cmp(&keys[b].0).then(keys[a].1.total_cmp(&keys[b].1)));
    let n = order.len();
    if n > 1 {
        let wrap_gap = keys[order[0]].0 + 2.0 * PI - keys[order[n - 1]].0;
        let (i, gap) = (1..n)
            .map(|i| (i, keys[order[i]].0 - keys[order[i - 1]].0))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if gap > wrap_gap && gap > PI {
            order.rotate_left(i);
        }
    }
    cluster.with_points_reordered(&order)
}

/// Side whose inward normal satisfies `argmin_i |α_i − β + π/2|`, where `β`
/// is the direction from the first to the last point. A single point (or
/// coincident points) goes to the nearest side.
pub fn associate_side(rect: &OrientedRectangle, sorted: &[Vector2<f64>]) -> SideAssociation {
    assert!(!sorted.is_empty(), "cannot associate an empty run");
    let first = sorted[0];
    let last = sorted[sorted.len() - 1];
    let chord = last - first;
    let side_index = if sorted.len() < 2 || chord.norm() < 1e-9 {
        (1..=4)
            .map(|i| (i, rect.side(i).distance(&first)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .unwrap()
    } else {
        let beta = chord.y.atan2(chord.x);
        (1..=4)
            .map(|i| (i, angle::wrap(normal_angle(rect.yaw, i) - beta + FRAC_PI_2).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .unwrap()
    };
    let side = rect.side(side_index);
    let h = side.half_length;
    let ta = side.coordinate(&first).clamp(-h, h);
    let tb = side.coordinate(&last).clamp(-h, h);
    SideAssociation {
        side_index,
        normal_angle: side.inward_normal,
        span_fraction: ((tb - ta).abs() / (2.0 * h)).clamp(f64::MIN_POSITIVE, 1.0),
    }
}

/// Orthogonal least-squares residual of a point set, from moment sums.
fn line_sse(n: f64, sx: f64, sy: f64, sxx: f64, syy: f64, sxy: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    let cxx = sxx - sx * sx / n;
    let cyy = syy - sy * sy / n;
    let cxy = sxy - sx * sy / n;
    let half_trace = 0.5 * (cxx + cyy);
    let disc = (0.25 * (cxx - cyy).powi(2) + cxy * cxy).sqrt();
    (half_trace - disc).max(0.0)
}

/// Best two-line split of a sorted run by exhaustive search over split
/// positions, each line fitted by orthogonal least squares.
pub fn corner_index(sorted: &[Vector2<f64>], ratio: f64) -> CornerSplit {
    let n = sorted.len();
    let origin = sorted.iter().sum::<Vector2<f64>>() / n.max(1) as f64;
    // prefix[k] holds sums over the first k points
    let mut prefix = vec![[0.0f64; 5]; n + 1];
    for (k, p) in sorted.iter().enumerate() {
        let d = p - origin;
        let prev = prefix[k];
        prefix[k + 1] = [
            prev[0] + d.x,
            prev[1] + d.y,
            prev[2] + d.x * d.x,
            prev[3] + d.y * d.y,
            prev[4] + d.x * d.y,
        ];
    }
    let sse = |a: usize, b: usize| {
        let s: Vec<f64> = (0..5).map(|i| prefix[b][i] - prefix[a][i]).collect();
        line_sse((b - a) as f64, s[0], s[1], s[2], s[3], s[4])
    };
    let single = sse(0, n);
    if n < 4 {
        return CornerSplit {
            split: n,
            is_two_sided: false,
            single_sse: single,
            two_line_sse: single,
        };
    }
    let (split, best) = (2..=n - 2)
        .map(|k| (k, sse(0, k) + sse(k, n)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    CornerSplit {
        split,
        is_two_sided: best < ratio * single,
        single_sse: single,
        two_line_sse: best,
    }
}

/// Side assignment for each run of consecutive (sorted) cluster points.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    pub runs: Vec<(usize, Range<usize>)>,
}

impl MeasurementPlan {
    pub fn is_two_sided(&self) -> bool {
        self.runs.len() == 2
    }
}

/// Decides single- or double-sided association of a sorted cluster against
/// `rect`.
pub fn plan(rect: &OrientedRectangle, sorted: &[Vector2<f64>], cfg: &ShapeConfig) -> MeasurementPlan {
    let n = sorted.len();
    let single = || MeasurementPlan {
        runs: vec![(associate_side(rect, sorted).side_index, 0..n)],
    };
    if n < 4 {
        return single();
    }
    let corner = corner_index(sorted, cfg.two_sided_ratio);
    if !corner.is_two_sided {
        return single();
    }
    let a = sorted[0] - rect.center;
    let b = sorted[n - 1] - rect.center;
    let subtended = angle::diff(b.y.atan2(b.x), a.y.atan2(a.x)).abs();
    if subtended <= cfg.two_sided_min_span {
        return single();
    }
    let first = associate_side(rect, &sorted[..corner.split]).side_index;
    let second = associate_side(rect, &sorted[corner.split..]).side_index;
    if first == second {
        return single();
    }
    MeasurementPlan {
        runs: vec![(first, 0..corner.split), (second, corner.split..n)],
    }
}

/// Point where the ray from the origin at `bearing` meets the side's line,
/// as a side coordinate; `None` when the ray runs parallel to the side.
fn ray_coordinate(side: &Side, bearing: f64) -> Option<f64> {
    let d = Vector2::new(bearing.cos(), bearing.sin());
    let denom = d.perp(&side.tangent);
    (denom.abs() > 1e-9).then(|| -d.perp(&side.midpoint) / denom)
}

/// Side coordinates of the predicted points for a run of measured points.
fn spread(side: &Side, run: &[Vector2<f64>], spacing: PointSpacing) -> Vec<f64> {
    let h = side.half_length;
    let project = |p: &Vector2<f64>| side.coordinate(p).clamp(-h, h);
    let count = run.len();
    if spacing == PointSpacing::Projection || count == 1 {
        return run.iter().map(project).collect();
    }
    let (ta, tb) = (project(&run[0]), project(&run[count - 1]));
    let frac = |j: usize| j as f64 / (count - 1) as f64;
    let even = || (0..count).map(|j| ta + (tb - ta) * frac(j)).collect();
    if spacing == PointSpacing::Arclength {
        return even();
    }
    let (pa, pb) = (side.at(ta), side.at(tb));
    let (ba, bb) = (pa.y.atan2(pa.x), pb.y.atan2(pb.x));
    let sweep = angle::diff(bb, ba);
    let (lo, hi) = (ta.min(tb), ta.max(tb));
    let ts: Option<Vec<f64>> = (0..count)
        .map(|j| ray_coordinate(side, ba + sweep * frac(j)).map(|t| t.clamp(lo, hi)))
        .collect();
    ts.unwrap_or_else(even)
}

/// Places the measurement-generating points for `plan` and returns the
/// concatenated predicted vector (2 or 4 entries per point).
pub fn predict_with_plan(
    rect: &OrientedRectangle,
    speed: f64,
    cluster: &MeasurementCluster,
    plan: &MeasurementPlan,
    spacing: PointSpacing,
) -> DVector<f64> {
    let dim = cluster.point_dim();
    let pts = cluster.points();
    let mut y = DVector::zeros(dim * pts.len());
    let velocity = Vector2::new(rect.yaw.cos(), rect.yaw.sin()) * speed;
    for (side_index, range) in &plan.runs {
        let side = rect.side(*side_index);
        for (idx, t) in range.clone().zip(spread(&side, &pts[range.clone()], spacing)) {
            let p = side.at(t);
            y[dim * idx] = p.x;
            y[dim * idx + 1] = p.y;
            if dim == 4 {
                y[dim * idx + 2] = velocity.x;
                y[dim * idx + 3] = velocity.y;
            }
        }
    }
    y
}

/// Predicted measurement vector `y_C(x)` for a state and a sorted cluster.
pub fn predict_meas_points(
    state: &ObjectState,
    cluster: &MeasurementCluster,
    frame: &dyn StateFrame,
    cfg: &ShapeConfig,
) -> Result<DVector<f64>, RoadError> {
    let rect = OrientedRectangle::from_state(state, frame)?;
    let p = plan(&rect, cluster.points(), cfg);
    Ok(predict_with_plan(&rect, state.v, cluster, &p, cfg.spacing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::ClusterTag;
    use crate::road::{CartesianFrame, EgoPose};

    fn rect(cx: f64, cy: f64, yaw: f64) -> OrientedRectangle {
        OrientedRectangle {
            center: Vector2::new(cx, cy),
            yaw,
            length: 4.8,
            width: 2.0,
        }
    }

    fn rotate(p: Vector2<f64>, phi: f64) -> Vector2<f64> {
        Vector2::new(phi.cos() * p.x - phi.sin() * p.y, phi.sin() * p.x + phi.cos() * p.y)
    }

    #[test]
    fn corners_average_to_center() {
        let r = rect(3.0, -2.0, 0.7);
        let mean = r.corners().iter().sum::<Vector2<f64>>() / 4.0;
        assert!((mean - r.center).norm() < 1e-12);
    }

    #[test]
    fn normals_are_quarter_turns_apart() {
        for yaw in [0.0, 1.0, -2.5, PI] {
            for i in 1..4 {
                let d = angle::diff(normal_angle(yaw, i + 1), normal_angle(yaw, i));
                assert!((d.abs() - FRAC_PI_2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sort_examples() {
        let at = |deg: f64| {
            let b = deg.to_radians();
            Vector2::new(10.0 * b.cos(), 10.0 * b.sin())
        };
        let single = MeasurementCluster::new(vec![at(3.0)], ClusterTag::LidarOnly);
        assert_eq!(sort_ccw(single.clone()), single);
        let c = MeasurementCluster::new(vec![at(10.0), at(-5.0), at(90.0)], ClusterTag::LidarOnly);
        let s = sort_ccw(c);
        assert_eq!(s.points(), &[at(-5.0), at(10.0), at(90.0)]);
    }

    #[test]
    fn sort_matches_reference_sort() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let pts: Vec<Vector2<f64>> = (0..50)
                .map(|_| Vector2::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)))
                .collect();
            let mut reference = pts.clone();
            reference.sort_by(|a, b| a.y.atan2(a.x).total_cmp(&b.y.atan2(b.x)));
            let s = sort_ccw(MeasurementCluster::new(pts, ClusterTag::LidarOnly));
            assert_eq!(s.points(), reference.as_slice());
        }
    }

    #[test]
    fn sort_behind_sensor_is_contiguous() {
        let pts: Vec<_> = (0..5).map(|i| Vector2::new(-8.0, -1.0 + 0.5 * i as f64)).collect();
        let s = sort_ccw(MeasurementCluster::new(pts.clone(), ClusterTag::LidarOnly));
        // counter-clockwise behind the sensor means decreasing y
        let ys: Vec<f64> = s.points().iter().map(|p| p.y).collect();
        assert_eq!(ys, vec![1.0, 0.5, 0.0, -0.5, -1.0]);
    }

    #[test]
    fn rear_side_for_leading_vehicle() {
        let r = rect(10.0, 0.0, 0.0);
        let pts: Vec<_> = (0..9).map(|i| Vector2::new(7.6, -0.9 + 0.225 * i as f64)).collect();
        let a = associate_side(&r, &pts);
        assert_eq!(a.side_index, 3);
        assert!((a.span_fraction - 0.9).abs() < 1e-12);
    }

    #[test]
    fn association_agrees_with_nearest_side_oracle() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let r = OrientedRectangle {
                center: Vector2::new(rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0)),
                yaw: rng.random_range(-PI..PI),
                length: rng.random_range(3.0..6.0),
                width: rng.random_range(1.5..2.5),
            };
            // a side facing the sensor
            let facing: Vec<usize> = (1..=4)
                .filter(|&i| {
                    let sd = r.side(i);
                    (sd.midpoint - r.center).dot(&sd.midpoint) < 0.0
                })
                .collect();
            let side = r.side(facing[rng.random_range(0..facing.len())]);
            let mut pts: Vec<Vector2<f64>> = (0..8)
                .map(|_| side.at(rng.random_range(-0.9..0.9) * side.half_length))
                .collect();
            let c = sort_ccw(MeasurementCluster::new(std::mem::take(&mut pts), ClusterTag::LidarOnly));
            let oracle = (1..=4)
                .map(|i| {
                    let sd = r.side(i);
                    let mean = c.points().iter().map(|p| sd.distance(p)).sum::<f64>() / c.len() as f64;
                    (i, mean)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0;
            assert_eq!(
                associate_side(&r, c.points()).side_index,
                oracle,
                "{r:?} {:?}",
                c.points()
            );
        }
    }

    #[test]
    fn parallel_measurements_have_zero_residual() {
        let r = rect(0.0, 12.0, 0.3);
        let side = r.side(4);
        let pts: Vec<_> = [-1.5, -0.5, 0.5, 1.5].iter().map(|&t| side.at(-t)).collect();
        let a = associate_side(&r, &pts);
        let beta = {
            let d = pts[3] - pts[0];
            d.y.atan2(d.x)
        };
        let best = angle::wrap(a.normal_angle - beta + FRAC_PI_2).abs();
        assert!(best < 1e-12);
    }

    #[test]
    fn single_point_goes_to_nearest_side() {
        let r = rect(10.0, 0.0, 0.0);
        assert_eq!(associate_side(&r, &[Vector2::new(7.5, 0.2)]).side_index, 3);
        assert_eq!(associate_side(&r, &[Vector2::new(10.5, -1.1)]).side_index, 4);
    }

    #[test]
    fn association_is_rotation_invariant() {
        let r = rect(12.0, 3.0, 0.2);
        let side = r.side(4);
        let pts: Vec<_> = (0..6).map(|i| side.at(2.0 - 0.8 * i as f64)).collect();
        let base = associate_side(&r, &pts).side_index;
        for k in 0..24 {
            let phi = k as f64 * 0.26;
            let rr = OrientedRectangle {
                center: rotate(r.center, phi),
                yaw: r.yaw + phi,
                ..r
            };
            let rp: Vec<_> = pts.iter().map(|p| rotate(*p, phi)).collect();
            assert_eq!(associate_side(&rr, &rp).side_index, base);
        }
    }

    #[test]
    fn l_shape_split() {
        // 7 points on the rear edge, 6 on the right edge, corner excluded
        let mut pts: Vec<Vector2<f64>> = (0..7).map(|i| Vector2::new(10.0, 1.0 - 0.15 * i as f64)).collect();
        pts.extend((1..=6).map(|i| Vector2::new(10.0 + 0.6 * i as f64, -0.2)));
        let c = corner_index(&pts, 0.5);
        assert_eq!(c.split, 7);
        assert!(c.is_two_sided);
        assert!(c.two_line_sse < 1e-20);
    }

    #[test]
    fn collinear_is_single_sided() {
        let pts: Vec<_> = (0..10)
            .map(|i| Vector2::new(5.0 + 0.3 * i as f64, 2.0 + 0.1 * i as f64))
            .collect();
        assert!(!corner_index(&pts, 0.5).is_two_sided);
        let three = &pts[..3];
        assert!(!corner_index(three, 0.5).is_two_sided);
    }

    fn ahead_frame() -> CartesianFrame {
        let ego = EgoPose {
            s: 0.0,
            n: 0.0,
            xi: 0.0,
            psi: 0.0,
            psi_rate: 0.0,
            v: 0.0,
        };
        CartesianFrame::new(ego, Vector2::zeros())
    }

    fn car(x: f64, y: f64, v: f64) -> ObjectState {
        ObjectState {
            s: x,
            n: y,
            v,
            xi: 0.0,
            xi_rate: 0.0,
            length: 4.8,
            width: 2.0,
        }
    }

    #[test]
    fn one_point_lands_on_boundary() {
        let frame = ahead_frame();
        let c = MeasurementCluster::new(vec![Vector2::new(7.4, 0.3)], ClusterTag::LidarOnly);
        let y = predict_meas_points(&car(10.0, 0.0, 0.0), &c, &frame, &ShapeConfig::default()).unwrap();
        let p = Vector2::new(y[0], y[1]);
        assert!(rect(10.0, 0.0, 0.0).boundary_distance(&p) < 1e-12);
        assert!((p - Vector2::new(7.6, 0.3)).norm() < 1e-12);
    }

    #[test]
    fn full_side_spread_evenly() {
        let frame = ahead_frame();
        let pts: Vec<_> = (0..10)
            .map(|i| Vector2::new(7.6, -1.0 + 2.0 * i as f64 / 9.0))
            .collect();
        let c = sort_ccw(MeasurementCluster::new(pts.clone(), ClusterTag::LidarOnly));
        let y = predict_meas_points(&car(10.0, 0.0, 0.0), &c, &frame, &ShapeConfig::default()).unwrap();
        assert_eq!(y.len(), 20);
        for (i, p) in pts.iter().enumerate() {
            let q = Vector2::new(y[2 * i], y[2 * i + 1]);
            assert!((q - p).norm() < 1e-9, "{i}: {q:?} vs {p:?}");
        }
    }

    #[test]
    fn oblique_view_splits_into_two_sides() {
        let frame = ahead_frame();
        let r = rect(10.0, 5.0, 0.0);
        let mut pts: Vec<Vector2<f64>> = (0..6).map(|i| Vector2::new(7.6, 4.2 + 0.3 * i as f64)).collect();
        pts.extend((0..8).map(|i| Vector2::new(8.0 + 0.5 * i as f64, 4.0)));
        let c = sort_ccw(MeasurementCluster::new(pts, ClusterTag::LidarOnly));
        let p = plan(&r, c.points(), &ShapeConfig::default());
        assert_eq!(p.runs, vec![(4, 0..8), (3, 8..14)]);
        let y = predict_meas_points(&car(10.0, 5.0, 0.0), &c, &frame, &ShapeConfig::default()).unwrap();
        for i in 0..14 {
            let q = Vector2::new(y[2 * i], y[2 * i + 1]);
            assert!(r.boundary_distance(&q) < 1e-9);
            assert!((q - c.points()[i]).norm() < 1e-9);
        }
    }

    #[test]
    fn fused_points_carry_center_velocity() {
        let frame = ahead_frame();
        let pts: Vec<_> = (0..3).map(|i| Vector2::new(7.6, -0.5 + 0.5 * i as f64)).collect();
        let c = MeasurementCluster::new(pts, ClusterTag::LidarOnly).fused(Vector2::new(9.0, 0.0));
        let y = predict_meas_points(&car(10.0, 0.0, 10.0), &c, &frame, &ShapeConfig::default()).unwrap();
        assert_eq!(y.len(), 12);
        for i in 0..3 {
            assert!((y[4 * i + 2] - 10.0).abs() < 1e-12 && y[4 * i + 3].abs() < 1e-12);
        }
    }
}
