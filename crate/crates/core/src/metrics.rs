//! Multi-object evaluation: GOSPA with its decomposition, and RMSE series.

use serde::{Deserialize, Serialize};

use crate::angle;
use crate::state::ObjectState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GospaParams {
    pub p: f64,
    pub c: f64,
    pub alpha: f64,
}

impl Default for GospaParams {
    fn default() -> Self {
        GospaParams {
            p: 2.0,
            c: 10.0,
            alpha: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GospaResult {
    pub total: f64,
    pub localization: f64,
    pub missed: f64,
    pub false_alarm: f64,
    pub n_missed: usize,
    pub n_false: usize,
    /// `(estimate index, truth index)` pairs closer than the cutoff.
    pub assignment: Vec<(usize, usize)>,
}

/// Minimum-cost perfect assignment on a square cost matrix (row-major),
/// returning the column assigned to each row.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    // shortest augmenting paths with row/column potentials, 1-based with a
    // virtual column 0
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut rows = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            rows[p[j] - 1] = j - 1;
        }
    }
    rows
}

/// GOSPA value and decomposition of an assignment given as
/// `(estimate, truth)` pairs; pairs at or beyond the cutoff count as one
/// missed and one false target.
pub fn gospa_of_assignment(
    dist: &dyn Fn(usize, usize) -> f64,
    n_est: usize,
    n_truth: usize,
    pairs: &[(usize, usize)],
    params: &GospaParams,
) -> GospaResult {
    let cp = params.c.powf(params.p);
    let mut sorted: Vec<(usize, usize)> = pairs.to_vec();
    sorted.sort_unstable();
    let mut loc = 0.0;
    let mut kept = Vec::new();
    for &(i, j) in &sorted {
        let d = dist(i, j);
        if d < params.c {
            loc += d.powf(params.p);
            kept.push((i, j));
        }
    }
    let n_missed = n_truth - kept.len();
    let n_false = n_est - kept.len();
    let missed = cp / params.alpha * n_missed as f64;
    let false_alarm = cp / params.alpha * n_false as f64;
    let inv = 1.0 / params.p;
    GospaResult {
        total: (loc + missed + false_alarm).powf(inv),
        localization: loc.powf(inv),
        missed: missed.powf(inv),
        false_alarm: false_alarm.powf(inv),
        n_missed,
        n_false,
        assignment: kept,
    }
}

/// GOSPA between two sets under an arbitrary base distance.
pub fn gospa_with<E, T>(
    estimates: &[E],
    truths: &[T],
    params: &GospaParams,
    base: impl Fn(&E, &T) -> f64,
) -> GospaResult {
    let (m, n) = (estimates.len(), truths.len());
    let dist = |i: usize, j: usize| base(&estimates[i], &truths[j]);
    let size = m + n;
    let cp = params.c.powf(params.p);
    let dummy = cp / params.alpha;
    let mut cost = vec![0.0; size * size];
    for i in 0..size {
        for j in 0..size {
            cost[i * size + j] = match (i < m, j < n) {
                (true, true) => dist(i, j).powf(params.p).min(cp),
                (true, false) | (false, true) => dummy,
                (false, false) => 0.0,
            };
        }
    }
    let rows = hungarian(&cost, size);
    let pairs: Vec<(usize, usize)> = (0..m).filter(|&i| rows[i] < n).map(|i| (i, rows[i])).collect();
    gospa_of_assignment(&dist, m, n, &pairs, params)
}

pub fn euclidean(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Positional GOSPA on 2D points.
pub fn gospa(estimates: &[[f64; 2]], truths: &[[f64; 2]], params: &GospaParams) -> GospaResult {
    gospa_with(estimates, truths, params, euclidean)
}

/// Object pose and extent in a common cartesian frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarObject {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub length: f64,
    pub width: f64,
}

/// Weighted distance over position, yaw and extent, for the optional state
/// GOSPA variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDistance {
    pub yaw_weight: f64,
    pub extent_weight: f64,
}

impl StateDistance {
    pub fn distance(&self, a: &PlanarObject, b: &PlanarObject) -> f64 {
        let pos2 = (a.x - b.x).powi(2) + (a.y - b.y).powi(2);
        let yaw2 = angle::diff(a.yaw, b.yaw).powi(2);
        let ext2 = (a.length - b.length).powi(2) + (a.width - b.width).powi(2);
        (pos2 + self.yaw_weight * yaw2 + self.extent_weight * ext2).sqrt()
    }
}

/// RMSE over the frames that have an error value; frames without one are
/// counted as missing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rmse {
    pub value: Option<f64>,
    pub matched: usize,
    pub missing: usize,
}

pub fn rmse_series(errors: impl IntoIterator<Item = Option<f64>>) -> Rmse {
    let (mut sum, mut matched, mut missing) = (0.0, 0usize, 0usize);
    for e in errors {
        match e {
            Some(e) => {
                sum += e * e;
                matched += 1;
            }
            None => missing += 1,
        }
    }
    Rmse {
        value: (matched > 0).then(|| (sum / matched as f64).sqrt()),
        matched,
        missing,
    }
}

/// RMSE of `field(estimate, truth)` over aligned series.
pub fn rmse_by<E, T>(estimates: &[Option<E>], truths: &[T], field: impl Fn(&E, &T) -> f64) -> Result<Rmse, String> {
    if estimates.len() != truths.len() {
        return Err(format!(
            "series lengths differ: {} estimates, {} truths",
            estimates.len(),
            truths.len()
        ));
    }
    Ok(rmse_series(
        estimates
            .iter()
            .zip(truths)
            .map(|(e, t)| e.as_ref().map(|e| field(e, t))),
    ))
}

/// Error of an estimated state against the truth in road coordinates.
pub fn position_error(a: &ObjectState, b: &ObjectState) -> f64 {
    (a.s - b.s).hypot(a.n - b.n)
}
