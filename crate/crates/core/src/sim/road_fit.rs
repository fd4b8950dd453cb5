//! Road construction from centerline waypoints.

use nalgebra::{DMatrix, DVector, Vector2};

use crate::angle;
use crate::road::{RoadError, RoadSegment, RoadSpline};

/// Largest heading change accepted between consecutive chords.
pub const MAX_CHORD_TURN: f64 = std::f64::consts::FRAC_PI_3;
/// Largest accepted gap between a span's integrated end and the next
/// waypoint.
pub const MAX_ANCHOR_GAP: f64 = 0.1;
/// Residual scale of waypoint misses relative to heading deviations.
const HIT_WEIGHT: f64 = 1e3;

/// Signed curvature of the circle through three points.
fn menger_curvature(a: &Vector2<f64>, b: &Vector2<f64>, c: &Vector2<f64>) -> f64 {
    let cross = (b - a).perp(&(c - a));
    2.0 * cross / ((b - a).norm() * (c - b).norm() * (c - a).norm())
}

fn direction(v: &Vector2<f64>) -> f64 {
    v.y.atan2(v.x)
}

fn segments_cross(p1: &Vector2<f64>, p2: &Vector2<f64>, q1: &Vector2<f64>, q2: &Vector2<f64>) -> bool {
    let d1 = (p2 - p1).perp(&(q1 - p1));
    let d2 = (p2 - p1).perp(&(q2 - p1));
    let d3 = (q2 - q1).perp(&(p1 - q1));
    let d4 = (q2 - q1).perp(&(p2 - q1));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Fits a road to `waypoints`. Heading and curvature at every waypoint come
/// from the circle through it and its neighbours; each span gets the cubic
/// heading polynomial matching heading and curvature at both ends, so both
/// are continuous at joints. Spans are anchored at their start waypoint and
/// their length is iterated until the integrated end meets the next
/// waypoint.
pub fn fit_road(waypoints: &[[f64; 2]], half_width: f64) -> Result<RoadSpline, RoadError> {
    let pts: Vec<Vector2<f64>> = waypoints.iter().map(|p| Vector2::new(p[0], p[1])).collect();
    if pts.len() < 2 {
        return Err(RoadError::InvalidMap("at least two waypoints are required".into()));
    }
    for (i, w) in pts.windows(2).enumerate() {
        if (w[1] - w[0]).norm() < 1e-6 {
            return Err(RoadError::InvalidMap(format!("waypoints {i} and {} coincide", i + 1)));
        }
    }
    let chords: Vec<Vector2<f64>> = pts.windows(2).map(|w| w[1] - w[0]).collect();
    for (i, w) in chords.windows(2).enumerate() {
        let turn = angle::diff(direction(&w[1]), direction(&w[0])).abs();
        if turn > MAX_CHORD_TURN {
            return Err(RoadError::InvalidMap(format!(
                "kink of {:.1} deg at waypoint {}",
                turn.to_degrees(),
                i + 1
            )));
        }
    }
    for i in 0..chords.len() {
        for j in i + 2..chords.len() {
            if segments_cross(&pts[i], &pts[i + 1], &pts[j], &pts[j + 1]) {
                return Err(RoadError::InvalidMap(format!(
                    "centerline crosses itself between spans {i} and {j}"
                )));
            }
        }
    }

    let n = pts.len();
    let mut kappa = vec![0.0; n];
    let mut heading = vec![0.0; n];
    if n == 2 {
        heading.fill(direction(&chords[0]));
    } else {
        for i in 1..n - 1 {
            kappa[i] = menger_curvature(&pts[i - 1], &pts[i], &pts[i + 1]);
        }
        kappa[0] = kappa[1];
        kappa[n - 1] = kappa[n - 2];
        // the tangent leaves a chord's end rotated by half the subtended arc
        let half_arc = |k: f64, chord: f64| (0.5 * k * chord).clamp(-1.0, 1.0).asin();
        heading[0] = direction(&chords[0]) - half_arc(kappa[0], chords[0].norm());
        for i in 1..n {
            let c = &chords[i - 1];
            heading[i] = direction(c) + half_arc(kappa[i], c.norm());
        }
        // unwrap so consecutive headings differ by less than π
        for i in 1..n {
            heading[i] = heading[i - 1] + angle::diff(heading[i], heading[i - 1]);
        }
    }

    // Refine headings, curvatures and span lengths jointly so that every
    // span ends on the next waypoint while staying close to the local
    // circle estimates (damped Gauss-Newton).
    let m = n - 1;
    let dim = 2 * n + m;
    let mut x = DVector::zeros(dim);
    for i in 0..n {
        x[i] = heading[i];
        x[n + i] = kappa[i];
    }
    for i in 0..m {
        x[2 * n + i] = chords[i].norm();
    }
    let prior = x.clone();
    let curv_weight = 100.0;
    let gap_of = |x: &DVector<f64>, i: usize| -> Vector2<f64> {
        let seg = span(
            0.0,
            x[2 * n + i].max(1e-3),
            x[i],
            x[i + 1],
            x[n + i],
            x[n + i + 1],
            &pts[i],
            half_width,
        );
        seg.point_at(seg.length) - pts[i + 1]
    };
    let residuals = |x: &DVector<f64>| -> DVector<f64> {
        let mut r = DVector::zeros(2 * m + 2 * n);
        for i in 0..m {
            let gap = gap_of(x, i);
            r[2 * i] = HIT_WEIGHT * gap.x;
            r[2 * i + 1] = HIT_WEIGHT * gap.y;
        }
        for i in 0..n {
            r[2 * m + i] = x[i] - prior[i];
            r[2 * m + n + i] = curv_weight * (x[n + i] - prior[n + i]);
        }
        r
    };
    let mut r = residuals(&x);
    let mut damping = 1e-6;
    for _ in 0..50 {
        // each span's miss depends only on its own five parameters
        let mut jac = DMatrix::zeros(r.len(), dim);
        for i in 0..m {
            let base = gap_of(&x, i);
            for j in [i, i + 1, n + i, n + i + 1, 2 * n + i] {
                let step = 1e-7 * x[j].abs().max(1.0);
                let mut xp = x.clone();
                xp[j] += step;
                let d = HIT_WEIGHT * (gap_of(&xp, i) - base) / step;
                jac[(2 * i, j)] = d.x;
                jac[(2 * i + 1, j)] = d.y;
            }
        }
        for i in 0..n {
            jac[(2 * m + i, i)] = 1.0;
            jac[(2 * m + n + i, n + i)] = curv_weight;
        }
        let jt = jac.transpose();
        let grad = &jt * &r;
        let mut normal = &jt * &jac;
        for j in 0..dim {
            normal[(j, j)] += damping * (1.0 + normal[(j, j)]);
        }
        let Some(delta) = normal.cholesky().map(|c| c.solve(&grad)) else {
            break;
        };
        let cand = &x - delta;
        let rc = residuals(&cand);
        if rc.norm_squared() < r.norm_squared() {
            let converged = (r.norm_squared() - rc.norm_squared()) < 1e-14 * (1.0 + r.norm_squared());
            x = cand;
            r = rc;
            damping = (damping * 0.3).max(1e-12);
            if converged {
                break;
            }
        } else {
            damping *= 10.0;
            if damping > 1e8 {
                break;
            }
        }
    }

    let mut segments = Vec::with_capacity(m);
    let mut s = 0.0;
    for i in 0..m {
        let len = x[2 * n + i];
        if !(len > 0.0) {
            return Err(RoadError::InvalidMap(format!("span {i} collapsed during fitting")));
        }
        let seg = span(s, len, x[i], x[i + 1], x[n + i], x[n + i + 1], &pts[i], half_width);
        let gap = (seg.point_at(len) - pts[i + 1]).norm();
        if gap > MAX_ANCHOR_GAP {
            return Err(RoadError::InvalidMap(format!(
                "span {i} misses waypoint {} by {gap:.3} m",
                i + 1
            )));
        }
        s += len;
        segments.push(seg);
    }
    RoadSpline::new(segments)
}

/// Cubic heading polynomial over `[0, len]` with prescribed end headings
/// and curvatures.
#[allow(clippy::too_many_arguments)]
fn span(s0: f64, len: f64, th0: f64, th1: f64, k0: f64, k1: f64, origin: &Vector2<f64>, hw: f64) -> RoadSegment {
    let h = len;
    let dth = th1 - th0;
    let a = (k0 + k1) / (h * h) - 2.0 * dth / (h * h * h);
    let b = 3.0 * dth / (h * h) - (2.0 * k0 + k1) / h;
    RoadSegment::from_heading(s0, [a, b, k0, th0], len, [origin.x, origin.y], hw)
}
