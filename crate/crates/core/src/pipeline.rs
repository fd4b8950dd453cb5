//! Per-frame tracking pipeline: road and visibility filtering, track-gated
//! and distance clustering, radar velocity fusion, point ordering and
//! thinning, and the filter step.

use std::time::Instant;

use nalgebra::Vector2;

use crate::fusion::{
    associate_radar, cluster_with_tracks, distance_cluster, ClusterTag, FusionConfig, MeasurementCluster,
};
use crate::gmphd::{FilterConfig, FilterError, FrameInput, GmPhdFilter, StepOutput};
use crate::meas_model::{sort_ccw, OrientedRectangle};
use crate::metrics::GospaParams;
use crate::preprocess::{filter_road_bounds, visibility_filter};
use crate::report::{estimate_record, evaluate_frame, observable_truths, EstimateFrame, MetricsRow};
use crate::road::{RoadFrame, RoadSpline, StateFrame};
use crate::sim::{ScenarioFrame, SensorSpec};
use crate::state::ObjectState;

/// Result of one pipeline cycle.
#[derive(Debug, Clone)]
pub struct TrackStep {
    pub output: StepOutput,
    /// Number of clusters passed to the filter.
    pub clusters: usize,
    /// Clusters carrying a radar velocity.
    pub fused: usize,
    /// Wall time of the whole cycle (ms).
    pub cycle_ms: f64,
}

pub struct Tracker {
    road: RoadSpline,
    filter: GmPhdFilter,
    use_radar: bool,
}

impl Tracker {
    pub fn new(road: RoadSpline, config: FilterConfig, use_radar: bool) -> Self {
        Tracker {
            road,
            filter: GmPhdFilter::new(config),
            use_radar,
        }
    }

    pub fn filter(&self) -> &GmPhdFilter {
        &self.filter
    }

    pub fn road(&self) -> &RoadSpline {
        &self.road
    }

    pub fn step(&mut self, frame: &ScenarioFrame) -> Result<TrackStep, FilterError> {
        let start = Instant::now();
        let cfg = self.filter.config().clone();
        let road_frame = RoadFrame::new(&self.road, frame.ego, &cfg.conversion)?;
        let ego_world = Vector2::new(frame.ego_world.x, frame.ego_world.y);

        let mut clusters = Vec::new();
        if frame.lidar_present {
            let on_road = filter_road_bounds(&frame.lidar, &road_frame);
            let visible = visibility_filter(&on_road, cfg.visibility_bin_deg.to_radians());
            let tracks = self.filter.predicted_tracks(frame.t);
            let state_frame = self.filter.state_frame(&road_frame, ego_world);
            let tracks = distinct_tracks(tracks, &state_frame);
            let (gated, rest) = cluster_with_tracks(&visible, &tracks, &state_frame, cfg.fusion.track_inflation);
            clusters = absorb_adjacent(gated, distance_cluster(&rest, cfg.fusion.cluster_eps), &cfg.fusion);
            if self.use_radar {
                clusters = associate_radar(clusters, &frame.radar, cfg.fusion.radar_gate);
            }
            clusters = clusters
                .into_iter()
                .map(|c| sort_ccw(c).thinned(cfg.fusion.max_points))
                .collect();
        }
        let fused = clusters.iter().filter(|c| c.velocity().is_some()).count();
        let output = self.filter.step(&FrameInput {
            t: frame.t,
            clusters: &clusters,
            lidar_present: frame.lidar_present,
            road_frame: &road_frame,
            ego_world,
        })?;
        Ok(TrackStep {
            output,
            clusters: clusters.len(),
            fused,
            cycle_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }
}

/// Drops tracks whose center lies inside the rectangle of a heavier track,
/// so that overlapping hypotheses of one object do not split its points.
fn distinct_tracks(tracks: Vec<ObjectState>, frame: &dyn StateFrame) -> Vec<ObjectState> {
    let mut kept: Vec<(ObjectState, Option<OrientedRectangle>)> = Vec::new();
    for t in tracks {
        let rect = OrientedRectangle::from_state(&t, frame).ok();
        let covered = rect.as_ref().is_some_and(|r| {
            kept.iter()
                .any(|(_, k)| k.as_ref().is_some_and(|k| k.contains(&r.center)))
        });
        if !covered {
            kept.push((t, rect));
        }
    }
    kept.into_iter().map(|(t, _)| t).collect()
}

/// Moves distance clusters of at least `absorb_min_points` points that come
/// within `cluster_eps` of a track-gated cluster into it; the remaining ones
/// are returned after the gated clusters.
fn absorb_adjacent(
    gated: Vec<MeasurementCluster>,
    others: Vec<MeasurementCluster>,
    cfg: &FusionConfig,
) -> Vec<MeasurementCluster> {
    let eps = cfg.cluster_eps;
    let mut merged: Vec<(Vec<Vector2<f64>>, ClusterTag)> =
        gated.iter().map(|c| (c.points().to_vec(), c.tag())).collect();
    let mut rest = Vec::new();
    for c in others {
        let near = (c.len() >= cfg.absorb_min_points).then_some(()).and_then(|_| {
            merged
                .iter()
                .position(|(pts, _)| pts.iter().any(|p| c.points().iter().any(|q| (p - q).norm() <= eps)))
        });
        match near {
            Some(i) => merged[i].0.extend_from_slice(c.points()),
            None => rest.push(c),
        }
    }
    let mut out: Vec<MeasurementCluster> = merged
        .into_iter()
        .map(|(pts, tag)| MeasurementCluster::new(pts, tag))
        .collect();
    out.extend(rest);
    out
}

/// Output of a whole tracking run.
#[derive(Debug, Clone)]
pub struct TrackRun {
    pub estimates: Vec<EstimateFrame>,
    pub metrics: Vec<MetricsRow>,
    pub cycle_ms: Vec<f64>,
}

/// Tracks every frame of a scenario and scores it against the observable
/// truths. Fails with the index of the first frame the filter rejects.
pub fn track_scenario(
    frames: &[ScenarioFrame],
    road: &RoadSpline,
    sensor: &SensorSpec,
    config: &FilterConfig,
    use_radar: bool,
    gospa: &GospaParams,
) -> Result<TrackRun, (usize, FilterError)> {
    let mut tracker = Tracker::new(road.clone(), config.clone(), use_radar);
    let mut run = TrackRun {
        estimates: Vec::with_capacity(frames.len()),
        metrics: Vec::with_capacity(frames.len()),
        cycle_ms: Vec::with_capacity(frames.len()),
    };
    for frame in frames {
        let step = tracker.step(frame).map_err(|e| (frame.index, e))?;
        let est = EstimateFrame {
            index: frame.index,
            t: frame.t,
            cardinality: step.output.cardinality,
            mass: step.output.mass,
            estimates: step
                .output
                .estimates
                .iter()
                .filter_map(|e| estimate_record(e, config.mode, road))
                .collect(),
        };
        run.metrics
            .push(evaluate_frame(&est, &observable_truths(frame, sensor), gospa));
        run.estimates.push(est);
        run.cycle_ms.push(step.cycle_ms);
    }
    Ok(run)
}
