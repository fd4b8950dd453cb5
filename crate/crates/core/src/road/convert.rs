use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::{CurvilinearPose, EgoPose, RoadError, RoadSpline};

/// Nodes per coarse search cell used by the inverse projection.
const COARSE_STRIDE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConversionConfig {
    /// Euler integration step δs along the centerline (m).
    pub step: f64,
    /// Maximum lateral distance for the inverse projection (m).
    pub corridor: f64,
    /// Centerline extent precomputed ahead of / behind the ego (m).
    pub reach_ahead: f64,
    pub reach_behind: f64,
}

impl Default for ConversionConfig {
    fn default() -> Self {
        ConversionConfig {
            step: 0.01,
            corridor: 20.0,
            reach_ahead: 150.0,
            reach_behind: 150.0,
        }
    }
}

/// Ego-anchored conversion context.
///
/// The centerline is Euler-integrated from the ego foot point,
/// `p_k = p_{k-1} + δs·(cos θ(s_k), sin θ(s_k))`, once per ego pose; nodes are
/// cached so every subsequent conversion is O(1) and bit-identical to
/// stepping from the foot point. Positions between nodes take a partial step
/// with the heading at the target arclength. Vehicle-frame coordinates are
/// obtained by translating by the ego's lateral offset and rotating by the
/// ego yaw.
#[derive(Debug, Clone)]
pub struct RoadFrame<'a> {
    road: &'a RoadSpline,
    ego: EgoPose,
    step: f64,
    corridor: f64,
    /// `ahead[k]` is the node at relative arclength `k·δs`.
    ahead: Vec<Vector2<f64>>,
    /// `behind[k]` is the node at relative arclength `-k·δs`.
    behind: Vec<Vector2<f64>>,
    s_min: f64,
    s_max: f64,
    ego_offset: Vector2<f64>,
    cos_psi: f64,
    sin_psi: f64,
}

fn direction(theta: f64) -> Vector2<f64> {
    Vector2::new(theta.cos(), theta.sin())
}

fn normal(theta: f64) -> Vector2<f64> {
    Vector2::new(-theta.sin(), theta.cos())
}

impl<'a> RoadFrame<'a> {
    pub fn new(road: &'a RoadSpline, ego: EgoPose, cfg: &ConversionConfig) -> Result<Self, RoadError> {
        Self::with_reach(road, ego, cfg.step, cfg.corridor, cfg.reach_behind, cfg.reach_ahead)
    }

    pub fn with_reach(
        road: &'a RoadSpline,
        ego: EgoPose,
        step: f64,
        corridor: f64,
        reach_behind: f64,
        reach_ahead: f64,
    ) -> Result<Self, RoadError> {
        if !(step > 0.0) {
            return Err(RoadError::InvalidStep(step));
        }
        let theta_e = road.heading(ego.s)?;
        let s_max = reach_ahead.max(0.0).min(road.total_length() - ego.s).max(0.0);
        let s_min = -(reach_behind.max(0.0).min(ego.s).max(0.0));

        let integrate = |limit: f64, sign: f64| -> Vec<Vector2<f64>> {
            let count = (limit / step).floor() as usize;
            let mut nodes = Vec::with_capacity(count + 1);
            let mut p = Vector2::zeros();
            nodes.push(p);
            for k in 1..=count {
                let s = ego.s + sign * (k as f64) * step;
                let th = road.segment_at(s).map(|(seg, u)| seg.heading_at(u)).unwrap_or(theta_e);
                p += sign * step * direction(th);
                nodes.push(p);
            }
            nodes
        };
        let ahead = integrate(s_max, 1.0);
        let behind = integrate(-s_min, -1.0);

        Ok(RoadFrame {
            road,
            ego,
            step,
            corridor,
            ahead,
            behind,
            s_min,
            s_max,
            ego_offset: ego.n * normal(theta_e),
            cos_psi: ego.psi.cos(),
            sin_psi: ego.psi.sin(),
        })
    }

    pub fn ego(&self) -> &EgoPose {
        &self.ego
    }

    pub fn road(&self) -> &'a RoadSpline {
        self.road
    }

    /// Relative arclength extent covered by this frame.
    pub fn extent(&self) -> (f64, f64) {
        (self.s_min, self.s_max)
    }

    fn check(&self, s_rel: f64) -> Result<(), RoadError> {
        if s_rel.is_finite() && s_rel >= self.s_min - 1e-9 && s_rel <= self.s_max + 1e-9 {
            Ok(())
        } else {
            Err(RoadError::OutOfRange {
                s: s_rel,
                min: self.s_min,
                max: self.s_max,
            })
        }
    }

    /// Heading at relative arclength (clamped into the road for the tolerance band).
    fn heading_rel(&self, s_rel: f64) -> f64 {
        let s = (self.ego.s + s_rel).clamp(0.0, self.road.total_length());
        let (seg, u) = self.road.segment_at(s).expect("clamped into range");
        seg.heading_at(u)
    }

    /// Centerline position in the foot-point frame (global orientation,
    /// origin at the ego foot point). Returns the position and the heading
    /// at `s_rel`.
    fn centerline(&self, s_rel: f64) -> (Vector2<f64>, f64) {
        let th = self.heading_rel(s_rel);
        let (nodes, sign) = if s_rel >= 0.0 {
            (&self.ahead, 1.0)
        } else {
            (&self.behind, -1.0)
        };
        let dist = s_rel.abs();
        let k = ((dist / self.step).floor() as usize).min(nodes.len() - 1);
        let rest = dist - k as f64 * self.step;
        (nodes[k] + sign * rest * direction(th), th)
    }

    fn foot_to_vehicle(&self, g: Vector2<f64>) -> Vector2<f64> {
        let d = g - self.ego_offset;
        Vector2::new(
            self.cos_psi * d.x + self.sin_psi * d.y,
            -self.sin_psi * d.x + self.cos_psi * d.y,
        )
    }

    fn vehicle_to_foot(&self, p: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(
            self.cos_psi * p.x - self.sin_psi * p.y,
            self.sin_psi * p.x + self.cos_psi * p.y,
        ) + self.ego_offset
    }

    /// Curvilinear → vehicle frame for a pose relative to the ego foot point.
    pub fn to_vehicle(&self, pose: &CurvilinearPose) -> Result<Vector2<f64>, RoadError> {
        self.check(pose.s)?;
        let (c, th) = self.centerline(pose.s);
        Ok(self.foot_to_vehicle(c + pose.n * normal(th)))
    }

    /// Vehicle frame → relative curvilinear `(s, n)`; `None` when no
    /// centerline point lies within the corridor.
    pub fn project(&self, p: &Vector2<f64>) -> Option<CurvilinearPose> {
        let q = self.vehicle_to_foot(p);
        let spacing = COARSE_STRIDE as f64 * self.step;

        // coarse samples along the window, ordered by arclength
        let mut stations = vec![self.s_min];
        let back_last = self.behind.len() - 1;
        let back: Vec<usize> = (COARSE_STRIDE..=back_last).step_by(COARSE_STRIDE).collect();
        stations.extend(back.iter().rev().map(|&k| -(k as f64) * self.step));
        stations.push(0.0);
        stations.extend(
            (COARSE_STRIDE..self.ahead.len())
                .step_by(COARSE_STRIDE)
                .map(|k| k as f64 * self.step),
        );
        stations.push(self.s_max);
        stations.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let coarse: Vec<(f64, f64)> = stations
            .into_iter()
            .map(|s| (s, (self.centerline(s).0 - q).norm()))
            .collect();

        let reach = self.corridor + spacing;
        let mut best: Option<CurvilinearPose> = None;
        for i in 0..coarse.len() {
            let d = coarse[i].1;
            if d > reach {
                continue;
            }
            let left = i == 0 || coarse[i - 1].1 >= d;
            let right = i + 1 == coarse.len() || coarse[i + 1].1 > d;
            if !(left && right) {
                continue;
            }
            let lo = (coarse[i].0 - 1.5 * spacing).max(self.s_min);
            let hi = (coarse[i].0 + 1.5 * spacing).min(self.s_max);
            if let Some(pose) = self.solve_foot(&q, lo, hi) {
                if pose.n.abs() <= self.corridor && best.is_none_or(|b| pose.n.abs() < b.n.abs()) {
                    best = Some(pose);
                }
            }
        }
        best
    }

    /// Finds `s` with `(q − c(s))·t(s) = 0` in `[lo, hi]` by bisection.
    fn solve_foot(&self, q: &Vector2<f64>, mut lo: f64, mut hi: f64) -> Option<CurvilinearPose> {
        let g = |s: f64| {
            let (c, th) = self.centerline(s);
            (q - c).dot(&direction(th))
        };
        let g_lo = g(lo);
        let g_hi = g(hi);
        const EDGE: f64 = 1e-9;
        if g_lo < -EDGE || g_hi > EDGE {
            return None;
        }
        if g_lo <= 0.0 {
            hi = lo;
        } else if g_hi >= 0.0 {
            lo = hi;
        }
        for _ in 0..80 {
            if hi - lo <= 1e-13 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        let (c, th) = self.centerline(s);
        Some(CurvilinearPose {
            s,
            n: (q - c).dot(&normal(th)),
            heading_offset: 0.0,
        })
    }

    /// Heading of the road at the ego foot point.
    pub fn ego_heading(&self) -> f64 {
        self.heading_rel(0.0)
    }
}

/// Curvilinear → cartesian vehicle frame by Euler integration with step
/// `step` from the ego foot point to the object foot point.
pub fn curv_to_cart(
    pose: &CurvilinearPose,
    ego: &EgoPose,
    road: &RoadSpline,
    step: f64,
) -> Result<Vector2<f64>, RoadError> {
    let end = ego.s + pose.s;
    if !(end >= -1e-9 && end <= road.total_length() + 1e-9) {
        return Err(RoadError::OutOfRange {
            s: end,
            min: 0.0,
            max: road.total_length(),
        });
    }
    let frame = RoadFrame::with_reach(
        road,
        *ego,
        step,
        f64::INFINITY,
        (-pose.s).max(0.0) + step,
        pose.s.max(0.0) + step,
    )?;
    frame.to_vehicle(pose)
}

/// Vehicle frame → curvilinear pose relative to the ego, searching the whole
/// road. `None` when the point is farther than `corridor` from the centerline.
pub fn cart_to_curv(point: &Vector2<f64>, ego: &EgoPose, road: &RoadSpline, corridor: f64) -> Option<CurvilinearPose> {
    let cfg = ConversionConfig {
        corridor,
        reach_ahead: f64::INFINITY,
        reach_behind: f64::INFINITY,
        ..ConversionConfig::default()
    };
    RoadFrame::new(road, *ego, &cfg).ok()?.project(point)
}
