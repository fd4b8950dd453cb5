//! Run reports: per-frame GOSPA decomposition and matched-pair errors
//! between estimates and truths in a common world frame, and the summary
//! derived from them.

use serde::{Deserialize, Serialize};

use crate::angle;
use crate::gmphd::{Estimate, FilterMode};
use crate::metrics::{gospa_with, GospaParams};
use crate::road::RoadSpline;
use crate::sim::{ScenarioFrame, SensorSpec};
use crate::state::ObjectState;

/// Object pose, extent and speed in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub length: f64,
    pub width: f64,
    /// Signed speed along the heading.
    pub speed: f64,
    pub weight: f64,
}

impl ObjectRecord {
    pub fn velocity(&self) -> [f64; 2] {
        [self.speed * self.yaw.cos(), self.speed * self.yaw.sin()]
    }
}

/// Maps a filter estimate to the world frame. Curvilinear states go through
/// the road; cartesian-baseline states are already world coordinates.
pub fn estimate_record(est: &Estimate, mode: FilterMode, road: &RoadSpline) -> Option<ObjectRecord> {
    let st = est.state;
    let (x, y, yaw) = match mode {
        FilterMode::Curvilinear => {
            let p = road.global_point(st.s, st.n).ok()?;
            (p.x, p.y, angle::wrap(road.heading(st.s).ok()? + st.xi))
        }
        FilterMode::CartesianBaseline => (st.s, st.n, st.xi),
    };
    Some(ObjectRecord {
        x,
        y,
        yaw,
        length: st.length,
        width: st.width,
        speed: st.v,
        weight: est.weight,
    })
}

/// Truths that the sensor could observe in this frame, as world records:
/// those with lidar returns and those whose center is in view.
pub fn observable_truths(frame: &ScenarioFrame, sensor: &SensorSpec) -> Vec<ObjectRecord> {
    frame
        .truths
        .iter()
        .filter(|t| {
            sensor.covers(&nalgebra::Vector2::new(t.vehicle.x, t.vehicle.y))
                || frame.labels.iter().flatten().any(|l| l.object == t.id)
        })
        .map(|t| truth_record(&t.state, t.world.x, t.world.y, t.world.yaw))
        .collect()
}

fn truth_record(st: &ObjectState, x: f64, y: f64, yaw: f64) -> ObjectRecord {
    ObjectRecord {
        x,
        y,
        yaw,
        length: st.length,
        width: st.width,
        speed: st.v,
        weight: 1.0,
    }
}

/// Estimates of one frame, as written by the tracker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateFrame {
    pub index: usize,
    pub t: f64,
    pub cardinality: usize,
    /// Total mixture weight after reduction.
    pub mass: f64,
    pub estimates: Vec<ObjectRecord>,
}

/// Per-frame metrics. Error columns hold root-mean-square values over the
/// matched pairs of the frame and are empty without matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub index: usize,
    pub t: f64,
    pub n_truth: usize,
    pub n_estimates: usize,
    pub cardinality: usize,
    pub mass: f64,
    pub gospa: f64,
    pub localization: f64,
    pub missed: f64,
    pub false_alarm: f64,
    pub matched: usize,
    pub position_error: Option<f64>,
    pub yaw_error: Option<f64>,
    pub velocity_error: Option<f64>,
    pub length_error: Option<f64>,
    pub width_error: Option<f64>,
}

fn rms(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut k) = (0.0, 0usize);
    for v in values {
        sum += v * v;
        k += 1;
    }
    (k > 0).then(|| (sum / k as f64).sqrt())
}

pub fn evaluate_frame(est: &EstimateFrame, truths: &[ObjectRecord], params: &GospaParams) -> MetricsRow {
    let g = gospa_with(&est.estimates, truths, params, |a, b| (a.x - b.x).hypot(a.y - b.y));
    let pairs: Vec<(&ObjectRecord, &ObjectRecord)> = g
        .assignment
        .iter()
        .map(|&(i, j)| (&est.estimates[i], &truths[j]))
        .collect();
    let err = |f: &dyn Fn(&ObjectRecord, &ObjectRecord) -> f64| rms(pairs.iter().map(|(a, b)| f(a, b)));
    MetricsRow {
        index: est.index,
        t: est.t,
        n_truth: truths.len(),
        n_estimates: est.estimates.len(),
        cardinality: est.cardinality,
        mass: est.mass,
        gospa: g.total,
        localization: g.localization,
        missed: g.missed,
        false_alarm: g.false_alarm,
        matched: pairs.len(),
        position_error: err(&|a, b| (a.x - b.x).hypot(a.y - b.y)),
        yaw_error: err(&|a, b| angle::diff(a.yaw, b.yaw)),
        velocity_error: err(&|a, b| {
            let (va, vb) = (a.velocity(), b.velocity());
            (va[0] - vb[0]).hypot(va[1] - vb[1])
        }),
        length_error: err(&|a, b| a.length - b.length),
        width_error: err(&|a, b| a.width - b.width),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub frames: usize,
    /// Frames before this time are excluded from the error summaries.
    pub burn_in: f64,
    pub mean_gospa: f64,
    pub position_rmse: Option<f64>,
    pub yaw_rmse: Option<f64>,
    pub velocity_rmse: Option<f64>,
    /// Mean absolute length and width errors over matched pairs.
    pub length_mean_error: Option<f64>,
    pub width_mean_error: Option<f64>,
    pub mean_cycle_ms: Option<f64>,
}

/// Summary statistics over the rows at or after `burn_in`. Error RMSEs pool
/// the per-frame values weighted by their match counts.
pub fn summarize(rows: &[MetricsRow], burn_in: f64, cycle_ms: Option<&[f64]>) -> Summary {
    let kept: Vec<&MetricsRow> = rows.iter().filter(|r| r.t >= burn_in).collect();
    let pooled = |f: fn(&MetricsRow) -> Option<f64>| {
        let (mut sum, mut k) = (0.0, 0usize);
        for r in &kept {
            if let Some(e) = f(r) {
                sum += e * e * r.matched as f64;
                k += r.matched;
            }
        }
        (k > 0).then(|| (sum / k as f64).sqrt())
    };
    let mean_abs = |f: fn(&MetricsRow) -> Option<f64>| {
        let v: Vec<f64> = kept.iter().filter_map(|r| f(r)).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let mean_gospa = if kept.is_empty() {
        0.0
    } else {
        kept.iter().map(|r| r.gospa).sum::<f64>() / kept.len() as f64
    };
    Summary {
        frames: rows.len(),
        burn_in,
        mean_gospa,
        position_rmse: pooled(|r| r.position_error),
        yaw_rmse: pooled(|r| r.yaw_error),
        velocity_rmse: pooled(|r| r.velocity_error),
        length_mean_error: mean_abs(|r| r.length_error),
        width_mean_error: mean_abs(|r| r.width_error),
        mean_cycle_ms: cycle_ms
            .filter(|c| !c.is_empty())
            .map(|c| c.iter().sum::<f64>() / c.len() as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(x: f64, y: f64) -> ObjectRecord {
        ObjectRecord {
            x,
            y,
            yaw: 0.0,
            length: 4.8,
            width: 2.0,
            speed: 10.0,
            weight: 1.0,
        }
    }

    fn frame(est: Vec<ObjectRecord>) -> EstimateFrame {
        EstimateFrame {
            index: 0,
            t: 2.0,
            cardinality: est.len(),
            mass: est.len() as f64,
            estimates: est,
        }
    }

    #[test]
    fn identical_sets_score_zero() {
        let truths = vec![rec(1.0, 2.0), rec(20.0, -3.0)];
        let row = evaluate_frame(&frame(truths.clone()), &truths, &GospaParams::default());
        assert_eq!(row.gospa, 0.0);
        assert_eq!(row.position_error, Some(0.0));
        assert_eq!(row.matched, 2);
    }

    #[test]
    fn shifted_estimate_localization() {
        let truths = vec![rec(1.0, 2.0)];
        let row = evaluate_frame(&frame(vec![rec(1.3, 2.0)]), &truths, &GospaParams::default());
        assert!((row.localization - 0.3).abs() < 1e-12);
        assert!((row.gospa - 0.3).abs() < 1e-12);
    }

    #[test]
    fn empty_estimates_only_missed() {
        let truths = vec![rec(1.0, 2.0)];
        let row = evaluate_frame(&frame(vec![]), &truths, &GospaParams::default());
        assert_eq!((row.localization, row.false_alarm), (0.0, 0.0));
        assert!((row.missed - 50f64.sqrt()).abs() < 1e-12);
        assert_eq!(row.position_error, None);
    }

    #[test]
    fn summary_pools_by_match_count() {
        let truths = vec![rec(0.0, 0.0), rec(50.0, 0.0)];
        let a = evaluate_frame(
            &frame(vec![rec(1.0, 0.0), rec(50.0, 0.0)]),
            &truths,
            &GospaParams::default(),
        );
        let mut b = evaluate_frame(&frame(vec![rec(2.0, 0.0)]), &truths[..1], &GospaParams::default());
        b.t = 3.0;
        let s = summarize(&[a, b], 0.0, None);
        // squared errors 1, 0, 4 over three pairs
        assert!((s.position_rmse.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(s.mean_cycle_ms, None);
    }
}
