use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::RoadError;

const HEADING_JOINT_TOL: f64 = 1e-6;
const CURVATURE_CONSISTENCY_TOL: f64 = 1e-3;

/// One piece of the centerline. Heading and curvature are cubic polynomials in
/// the local arclength `u = s - s_start`, coefficients ordered `(a, b, c, d)`
/// for `a·u³ + b·u² + c·u + d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub s_start: f64,
    pub heading: [f64; 4],
    pub curvature: [f64; 4],
    pub length: f64,
    /// Global cartesian position of the segment start.
    pub origin: [f64; 2],
    pub half_width: f64,
}

fn cubic(c: &[f64; 4], u: f64) -> f64 {
    ((c[0] * u + c[1]) * u + c[2]) * u + c[3]
}

fn cubic_derivative(c: &[f64; 4], u: f64) -> f64 {
    (3.0 * c[0] * u + 2.0 * c[1]) * u + c[2]
}

impl RoadSegment {
    /// Builds a segment whose curvature polynomial is the exact derivative of
    /// the heading polynomial.
    pub fn from_heading(s_start: f64, heading: [f64; 4], length: f64, origin: [f64; 2], half_width: f64) -> Self {
        let [a, b, c, _] = heading;
        RoadSegment {
            s_start,
            heading,
            curvature: [0.0, 3.0 * a, 2.0 * b, c],
            length,
            origin,
            half_width,
        }
    }

    pub fn heading_at(&self, u: f64) -> f64 {
        cubic(&self.heading, u)
    }

    pub fn curvature_at(&self, u: f64) -> f64 {
        cubic(&self.curvature, u)
    }

    pub fn s_end(&self) -> f64 {
        self.s_start + self.length
    }

    /// Global position at local arclength `u`, integrated from the anchor with
    /// composite 5-point Gauss-Legendre quadrature.
    pub fn point_at(&self, u: f64) -> Vector2<f64> {
        const NODES: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_47,
            0.478_628_670_499_366_47,
            0.236_926_885_056_189_08,
            0.236_926_885_056_189_08,
        ];
        let mut p = Vector2::new(self.origin[0], self.origin[1]);
        if u == 0.0 {
            return p;
        }
        let pieces = (u.abs() / 0.5).ceil().max(1.0) as usize;
        let h = u / pieces as f64;
        for i in 0..pieces {
            let mid = (i as f64 + 0.5) * h;
            for (x, w) in NODES.iter().zip(WEIGHTS.iter()) {
                let th = self.heading_at(mid + 0.5 * h * x);
                p += 0.5 * h * w * Vector2::new(th.cos(), th.sin());
            }
        }
        p
    }
}

/// Ordered segment list describing a single road centerline.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadSpline {
    segments: Vec<RoadSegment>,
    total_length: f64,
}

impl RoadSpline {
    /// Validates ordering, contiguity, heading continuity and
    /// heading/curvature consistency.
    pub fn new(segments: Vec<RoadSegment>) -> Result<Self, RoadError> {
        if segments.is_empty() {
            return Err(RoadError::InvalidMap("road has no segments".into()));
        }
        if segments[0].s_start.abs() > 1e-9 {
            return Err(RoadError::InvalidMap(format!(
                "first segment starts at s={} instead of 0",
                segments[0].s_start
            )));
        }
        let mut total = 0.0;
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.length > 0.0) || !seg.length.is_finite() {
                return Err(RoadError::InvalidMap(format!(
                    "segment {i}: non-positive length {}",
                    seg.length
                )));
            }
            if !(seg.half_width > 0.0) {
                return Err(RoadError::InvalidMap(format!(
                    "segment {i}: non-positive half width {}",
                    seg.half_width
                )));
            }
            if (seg.s_start - total).abs() > 1e-6 {
                return Err(RoadError::InvalidMap(format!(
                    "segment {i}: s_start {} does not follow previous end {total}",
                    seg.s_start
                )));
            }
            for k in 0..=16 {
                let u = seg.length * k as f64 / 16.0;
                let gap = (seg.curvature_at(u) - cubic_derivative(&seg.heading, u)).abs();
                if gap >= CURVATURE_CONSISTENCY_TOL {
                    return Err(RoadError::InvalidMap(format!(
                        "segment {i}: curvature differs from heading derivative by {gap:.3e} at u={u:.3}"
                    )));
                }
            }
            if i > 0 {
                let prev = &segments[i - 1];
                let jump = (prev.heading_at(prev.length) - seg.heading_at(0.0)).abs();
                if jump >= HEADING_JOINT_TOL {
                    return Err(RoadError::HeadingDiscontinuity { joint: i, jump });
                }
            }
            total += seg.length;
        }
        Ok(RoadSpline {
            segments,
            total_length: total,
        })
    }

    /// Single straight segment starting at the global origin.
    pub fn straight(length: f64, heading: f64, half_width: f64) -> Result<Self, RoadError> {
        Self::new(vec![RoadSegment::from_heading(
            0.0,
            [0.0, 0.0, 0.0, heading],
            length,
            [0.0, 0.0],
            half_width,
        )])
    }

    /// Builds a road whose curvature is piecewise linear between `(s, κ)`
    /// knots (clothoid pieces and arcs), starting at the global origin with
    /// heading `heading0`. Anchors are integrated so the centerline is
    /// continuous.
    pub fn from_curvature_knots(knots: &[(f64, f64)], heading0: f64, half_width: f64) -> Result<Self, RoadError> {
        if knots.len() < 2 || knots[0].0 != 0.0 {
            return Err(RoadError::InvalidMap(
                "curvature profile needs at least two knots starting at s=0".into(),
            ));
        }
        let mut segments = Vec::with_capacity(knots.len() - 1);
        let mut heading = heading0;
        let mut origin = [0.0, 0.0];
        for w in knots.windows(2) {
            let ((s0, k0), (s1, k1)) = (w[0], w[1]);
            let len = s1 - s0;
            if !(len > 0.0) {
                return Err(RoadError::InvalidMap(format!(
                    "curvature knots not increasing at s={s1}"
                )));
            }
            let slope = (k1 - k0) / len;
            let seg = RoadSegment::from_heading(s0, [0.0, 0.5 * slope, k0, heading], len, origin, half_width);
            let end = seg.point_at(len);
            heading = seg.heading_at(len);
            origin = [end.x, end.y];
            segments.push(seg);
        }
        Self::new(segments)
    }

    pub fn segments(&self) -> &[RoadSegment] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    fn check(&self, s: f64) -> Result<(), RoadError> {
        if s.is_finite() && s >= -1e-9 && s <= self.total_length + 1e-9 {
            Ok(())
        } else {
            Err(RoadError::OutOfRange {
                s,
                min: 0.0,
                max: self.total_length,
            })
        }
    }

    /// Index of the segment containing `s` (binary search over `s_start`).
    /// The caller guarantees `s` is in range.
    fn locate(&self, s: f64) -> usize {
        let idx = self.segments.partition_point(|seg| seg.s_start <= s);
        idx.saturating_sub(1)
    }

    pub fn segment_at(&self, s: f64) -> Result<(&RoadSegment, f64), RoadError> {
        self.check(s)?;
        let seg = &self.segments[self.locate(s)];
        Ok((seg, s - seg.s_start))
    }

    /// Road heading θ(s).
    pub fn heading(&self, s: f64) -> Result<f64, RoadError> {
        let (seg, u) = self.segment_at(s)?;
        Ok(seg.heading_at(u))
    }

    /// Road curvature κ(s).
    pub fn curvature(&self, s: f64) -> Result<f64, RoadError> {
        let (seg, u) = self.segment_at(s)?;
        Ok(seg.curvature_at(u))
    }

    pub fn half_width(&self, s: f64) -> Result<f64, RoadError> {
        Ok(self.segment_at(s)?.0.half_width)
    }

    /// Global centerline position (accurate quadrature from the segment anchor).
    pub fn point(&self, s: f64) -> Result<Vector2<f64>, RoadError> {
        let (seg, u) = self.segment_at(s)?;
        Ok(seg.point_at(u))
    }

    /// Global position of the curvilinear point `(s, n)`, `n` positive to the
    /// left of the travel direction.
    pub fn global_point(&self, s: f64, n: f64) -> Result<Vector2<f64>, RoadError> {
        let c = self.point(s)?;
        let th = self.heading(s)?;
        Ok(c + n * Vector2::new(-th.sin(), th.cos()))
    }

    /// Largest heading jump across segment joints.
    pub fn max_joint_discontinuity(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| (w[0].heading_at(w[0].length) - w[1].heading_at(0.0)).abs())
            .fold(0.0, f64::max)
    }
}
