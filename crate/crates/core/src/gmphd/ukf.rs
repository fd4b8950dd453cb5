//! Scaled unscented transform and the UKF measurement update.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::angle;
use crate::state::{StateMatrix, StateVector, IDX_XI, STATE_DIM};

/// Spread parameters of the scaled unscented transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UkfParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UkfParams {
    fn default() -> Self {
        UkfParams {
            alpha: 1e-3,
            beta: 2.0,
            kappa: 0.0,
        }
    }
}

/// `2n + 1` sigma points with mean and covariance weights.
#[derive(Debug, Clone)]
pub struct SigmaPoints {
    pub points: Vec<StateVector>,
    pub wm: Vec<f64>,
    pub wc: Vec<f64>,
}

impl UkfParams {
    fn lambda(&self) -> f64 {
        let n = STATE_DIM as f64;
        self.alpha * self.alpha * (n + self.kappa) - n
    }

    /// Sigma points of `(mean, cov)`; `None` when `cov` is not positive
    /// definite.
    pub fn sigma_points(&self, mean: &StateVector, cov: &StateMatrix) -> Option<SigmaPoints> {
        let n = STATE_DIM as f64;
        let lambda = self.lambda();
        let chol = (cov * (n + lambda)).cholesky()?;
        let l = chol.l();
        let mut points = Vec::with_capacity(2 * STATE_DIM + 1);
        points.push(*mean);
        for j in 0..STATE_DIM {
            points.push(mean + l.column(j));
        }
        for j in 0..STATE_DIM {
            points.push(mean - l.column(j));
        }
        let w = 0.5 / (n + lambda);
        let mut wm = vec![w; 2 * STATE_DIM + 1];
        let mut wc = wm.clone();
        wm[0] = lambda / (n + lambda);
        wc[0] = wm[0] + 1.0 - self.alpha * self.alpha + self.beta;
        Some(SigmaPoints { points, wm, wc })
    }
}

fn state_residual(a: &StateVector, b: &StateVector) -> StateVector {
    let mut d = a - b;
    d[IDX_XI] = angle::wrap(d[IDX_XI]);
    d
}

/// Mean and covariance of `f(x)` for `x ~ (mean, cov)`. The yaw slot is
/// averaged through wrapped residuals about the transformed center point.
pub fn transform_state(
    params: &UkfParams,
    mean: &StateVector,
    cov: &StateMatrix,
    f: impl Fn(&StateVector) -> StateVector,
) -> Option<(StateVector, StateMatrix)> {
    let sp = params.sigma_points(mean, cov)?;
    let ys: Vec<StateVector> = sp.points.iter().map(f).collect();
    let mut m = ys[0];
    for (y, w) in ys.iter().zip(&sp.wm).skip(1) {
        m += *w * state_residual(y, &ys[0]);
    }
    m[IDX_XI] = angle::wrap(m[IDX_XI]);
    let mut p = StateMatrix::zeros();
    for (y, w) in ys.iter().zip(&sp.wc) {
        let d = state_residual(y, &m);
        p += *w * d * d.transpose();
    }
    Some((m, 0.5 * (p + p.transpose())))
}

/// Result of one UKF measurement update.
#[derive(Debug, Clone)]
pub struct UkfUpdate {
    pub mean: StateVector,
    pub cov: StateMatrix,
    /// `ln 𝒩(z; ŷ, S)`.
    pub log_likelihood: f64,
    pub predicted: DVector<f64>,
    pub innovation_cov: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum UkfError {
    #[error("state covariance is not positive definite")]
    StateCovariance,
    #[error("innovation covariance is singular or ill-conditioned (condition estimate {0:.3e})")]
    IllConditioned(f64),
}

/// Condition numbers of the innovation covariance above this reject the
/// update.
pub const MAX_CONDITION: f64 = 1e12;

/// UKF update of `(mean, cov)` with measurement `z`, measurement function
/// `h` and diagonal measurement noise `r_diag`.
pub fn update(
    params: &UkfParams,
    mean: &StateVector,
    cov: &StateMatrix,
    z: &DVector<f64>,
    r_diag: &DVector<f64>,
    h: impl Fn(&StateVector) -> DVector<f64>,
) -> Result<UkfUpdate, UkfError> {
    let sp = params.sigma_points(mean, cov).ok_or(UkfError::StateCovariance)?;
    let zeta: Vec<DVector<f64>> = sp.points.iter().map(h).collect();
    let m = z.len();
    let mut y = zeta[0].clone();
    for (zi, w) in zeta.iter().zip(&sp.wm).skip(1) {
        y.axpy(*w, &(zi - &zeta[0]), 1.0);
    }
    let mut s = DMatrix::from_diagonal(r_diag);
    let mut t = DMatrix::zeros(STATE_DIM, m);
    for ((zi, x), w) in zeta.iter().zip(&sp.points).zip(&sp.wc) {
        let dz = zi - &y;
        let dx = state_residual(x, mean);
        s.ger(*w, &dz, &dz, 1.0);
        t.ger(*w, &DVector::from_column_slice(dx.as_slice()), &dz, 1.0);
    }
    let s = 0.5 * (&s + s.transpose());
    let chol = s.clone().cholesky().ok_or(UkfError::IllConditioned(f64::INFINITY))?;
    let diag = chol.l_dirty().diagonal();
    let (dmin, dmax) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    let cond = (dmax / dmin).powi(2);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(UkfError::IllConditioned(cond));
    }
    let innov = z - &y;
    let s_inv_innov = chol.solve(&innov);
    let s_inv_tt = chol.solve(&t.transpose());
    let dmean = &t * &s_inv_innov;
    let dcov = &t * &s_inv_tt;
    let mut new_mean = *mean;
    let mut new_cov = *cov;
    for i in 0..STATE_DIM {
        new_mean[i] += dmean[i];
        for j in 0..STATE_DIM {
            new_cov[(i, j)] -= dcov[(i, j)];
        }
    }
    new_mean[IDX_XI] = angle::wrap(new_mean[IDX_XI]);
    let log_det: f64 = 2.0 * diag.iter().map(|d| d.ln()).sum::<f64>();
    let maha = innov.dot(&s_inv_innov);
    let log_likelihood = -0.5 * (m as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + maha);
    Ok(UkfUpdate {
        mean: new_mean,
        cov: 0.5 * (new_cov + new_cov.transpose()),
        log_likelihood,
        predicted: y,
        innovation_cov: s,
    })
}
