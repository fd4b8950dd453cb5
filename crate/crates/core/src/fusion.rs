//! Measurement clustering and lidar/radar fusion.
//!
//! Points are first gated against the previous tracks (each track's
//! rectangle, inflated by a margin, claims the points inside it); the
//! remaining points are grouped by single-linkage distance clustering.
//! Radar detections are then attached to clusters by greedy
//! globally-closest-first association on cluster centroids, which augments
//! every point of the matched cluster with the detection's velocity.

use std::collections::HashMap;

use log::debug;
use nalgebra::{DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::preprocess::{LidarPoint, RadarDetection};
use crate::road::StateFrame;
use crate::state::ObjectState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClusterTag {
    LidarOnly,
    LidarTrackGated,
    LidarRadarFused,
}

/// Points believed to stem from one object. When `velocity` is set (fused
/// clusters) every point carries it as `(x, y, vx, vy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementCluster {
    points: Vec<Vector2<f64>>,
    velocity: Option<Vector2<f64>>,
    tag: ClusterTag,
    centroid: Vector2<f64>,
}

impl MeasurementCluster {
    /// # Panics
    /// When `points` is empty.
    pub fn new(points: Vec<Vector2<f64>>, tag: ClusterTag) -> Self {
        assert!(!points.is_empty(), "a cluster needs at least one point");
        let centroid = points.iter().sum::<Vector2<f64>>() / points.len() as f64;
        MeasurementCluster {
            points,
            velocity: None,
            tag,
            centroid,
        }
    }

    pub fn from_lidar(points: &[LidarPoint], tag: ClusterTag) -> Self {
        Self::new(points.iter().map(|p| p.pos()).collect(), tag)
    }

    /// Attaches a radar velocity to every point and retags the cluster.
    pub fn fused(mut self, velocity: Vector2<f64>) -> Self {
        self.velocity = Some(velocity);
        self.tag = ClusterTag::LidarRadarFused;
        self
    }

    pub fn points(&self) -> &[Vector2<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn velocity(&self) -> Option<Vector2<f64>> {
        self.velocity
    }

    pub fn tag(&self) -> ClusterTag {
        self.tag
    }

    pub fn centroid(&self) -> Vector2<f64> {
        self.centroid
    }

    /// 2 for position-only points, 4 when radar velocity is attached.
    pub fn point_dim(&self) -> usize {
        if self.velocity.is_some() {
            4
        } else {
            2
        }
    }

    /// Reorders the points; the centroid is unaffected.
    pub fn with_points_reordered(mut self, order: &[usize]) -> Self {
        debug_assert_eq!(order.len(), self.points.len());
        self.points = order.iter().map(|&i| self.points[i]).collect();
        self
    }

    /// Keeps `max` points evenly spaced along the current order, including
    /// the first and the last; the centroid is unaffected.
    pub fn thinned(mut self, max: usize) -> Self {
        let n = self.points.len();
        if n > max && max >= 2 {
            self.points = (0..max).map(|k| self.points[k * (n - 1) / (max - 1)]).collect();
        }
        self
    }

    /// Vertically concatenated measurement vector `z_C`.
    pub fn measurement_vector(&self) -> DVector<f64> {
        let d = self.point_dim();
        let mut z = DVector::zeros(d * self.points.len());
        for (i, p) in self.points.iter().enumerate() {
            z[d * i] = p.x;
            z[d * i + 1] = p.y;
            if let Some(v) = self.velocity {
                z[d * i + 2] = v.x;
                z[d * i + 3] = v.y;
            }
        }
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Margin added to each side of a track rectangle when gating points (m).
    pub track_inflation: f64,
    /// Single-linkage distance for leftover points (m).
    pub cluster_eps: f64,
    /// Leftover clusters need this many points to join an adjacent
    /// track-gated cluster; isolated returns are treated as clutter.
    pub absorb_min_points: usize,
    /// Maximum centroid-to-detection distance for radar association (m).
    pub radar_gate: f64,
    /// Clusters with more points are thinned to this many before the
    /// update; the update cost grows with the cube of the point count.
    pub max_points: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            track_inflation: 0.5,
            cluster_eps: 1.5,
            absorb_min_points: 2,
            radar_gate: 3.0,
            max_points: 40,
        }
    }
}

/// Rectangle of a track in the vehicle frame, used for point gating.
#[derive(Debug, Clone, Copy)]
struct GateBox {
    center: Vector2<f64>,
    cos: f64,
    sin: f64,
    half_l: f64,
    half_w: f64,
}

impl GateBox {
    /// Normalized Chebyshev distance; `<= 1` means inside.
    fn reach(&self, p: &Vector2<f64>) -> f64 {
        let d = p - self.center;
        let along = self.cos * d.x + self.sin * d.y;
        let across = -self.sin * d.x + self.cos * d.y;
        (along.abs() / self.half_l).max(across.abs() / self.half_w)
    }
}

/// Claims the points that fall inside each track's rectangle inflated by
/// `inflation` on every side. A point inside several rectangles goes to the
/// one it is most deeply inside. Returns one cluster per track that claimed
/// points, plus the unclaimed points.
pub fn cluster_with_tracks(
    points: &[LidarPoint],
    tracks: &[ObjectState],
    frame: &dyn StateFrame,
    inflation: f64,
) -> (Vec<MeasurementCluster>, Vec<LidarPoint>) {
    let boxes: Vec<GateBox> = tracks
        .iter()
        .filter_map(|t| {
            let center = frame.position_to_vehicle(t.s, t.n).ok()?;
            let (psi, _) = frame.yaw_to_vehicle(t).ok()?;
            Some(GateBox {
                center,
                cos: psi.cos(),
                sin: psi.sin(),
                half_l: 0.5 * t.length.abs() + inflation,
                half_w: 0.5 * t.width.abs() + inflation,
            })
        })
        .collect();

    let mut claimed: Vec<Vec<Vector2<f64>>> = vec![Vec::new(); boxes.len()];
    let mut leftovers = Vec::new();
    for p in points {
        let pos = p.pos();
        let best = boxes
            .iter()
            .enumerate()
            .map(|(i, b)| (i, b.reach(&pos)))
            .filter(|(_, r)| *r <= 1.0)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, _)) => claimed[i].push(pos),
            None => leftovers.push(*p),
        }
    }
    let clusters = claimed
        .into_iter()
        .filter(|c| !c.is_empty())
        .map(|c| MeasurementCluster::new(c, ClusterTag::LidarTrackGated))
        .collect();
    (clusters, leftovers)
}

/// Connected components of the graph linking points closer than `eps`.
/// Clusters are ordered by their first point's input index.
pub fn distance_cluster(points: &[LidarPoint], eps: f64) -> Vec<MeasurementCluster> {
    assert!(eps > 0.0, "clustering distance must be positive");
    let cell = |p: &LidarPoint| ((p.x / eps).floor() as i64, (p.y / eps).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }

    let eps2 = eps * eps;
    let mut label = vec![usize::MAX; points.len()];
    let mut clusters = Vec::new();
    for seed in 0..points.len() {
        if label[seed] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        label[seed] = id;
        let mut members = vec![seed];
        let mut frontier = vec![seed];
        while let Some(i) = frontier.pop() {
            let (cx, cy) = cell(&points[i]);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(bucket) = grid.get(&(cx + dx, cy + dy)) else {
                        continue;
                    };
                    for &j in bucket {
                        if label[j] == usize::MAX && (points[i].pos() - points[j].pos()).norm_squared() <= eps2 {
                            label[j] = id;
                            members.push(j);
                            frontier.push(j);
                        }
                    }
                }
            }
        }
        members.sort_unstable();
        let pts: Vec<LidarPoint> = members.iter().map(|&k| points[k]).collect();
        clusters.push(MeasurementCluster::from_lidar(&pts, ClusterTag::LidarOnly));
    }
    clusters
}

/// Greedy nearest-neighbour association of radar detections to cluster
/// centroids: the globally closest remaining pair within `gate` is matched
/// first; each cluster and each detection is used at most once. Unmatched
/// clusters are returned unchanged.
pub fn associate_radar(
    clusters: Vec<MeasurementCluster>,
    radar: &[RadarDetection],
    gate: f64,
) -> Vec<MeasurementCluster> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ci, c) in clusters.iter().enumerate() {
        for (ri, r) in radar.iter().enumerate() {
            if !r.is_valid() {
                continue;
            }
            let d = (c.centroid() - r.pos()).norm();
            if d <= gate {
                pairs.push((d, ci, ri));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut cluster_match: Vec<Option<usize>> = vec![None; clusters.len()];
    let mut radar_used = vec![false; radar.len()];
    for (_, ci, ri) in pairs {
        if cluster_match[ci].is_none() && !radar_used[ri] {
            cluster_match[ci] = Some(ri);
            radar_used[ri] = true;
        }
    }
    debug!(
        "radar association: {} of {} clusters fused",
        cluster_match.iter().flatten().count(),
        cluster_match.len()
    );
    clusters
        .into_iter()
        .zip(cluster_match)
        .map(|(c, m)| match m {
            Some(ri) => c.fused(Vector2::new(radar[ri].vx, radar[ri].vy)),
            None => c,
        })
        .collect()
}
