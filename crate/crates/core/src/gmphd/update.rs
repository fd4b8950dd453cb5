//! Extended-target measurement update of the mixture.

use nalgebra::DVector;

use super::ukf::{self, UkfError};
use super::{FilterConfig, GaussianComponent};
use crate::fusion::MeasurementCluster;
use crate::meas_model::{self, OrientedRectangle};
use crate::road::StateFrame;
use crate::state::{ObjectState, StateVector, IDX_N, IDX_S};

/// Per-point measurement noise variances for a cluster. A shared radar
/// velocity replicated on `|C|` points carries `|C|` times its variance per
/// point, so that the replicas together weigh as one measurement.
pub fn noise_diagonal(cluster: &MeasurementCluster, cfg: &FilterConfig) -> DVector<f64> {
    let dim = cluster.point_dim();
    let r = cfg.sigma_r * cfg.sigma_r;
    let share = if cfg.share_radar_velocity {
        cluster.len() as f64
    } else {
        1.0
    };
    let v = cfg.sigma_v * cfg.sigma_v * share;
    DVector::from_fn(dim * cluster.len(), |i, _| if i % dim < 2 { r } else { v })
}

/// Updates one component with one sorted cluster. The side association is
/// decided once at the component mean and reused for every sigma point.
/// Returns the updated component (weight unchanged) and `ln 𝒩(z_C; ŷ, S)`.
pub fn ukf_update_component(
    comp: &GaussianComponent,
    cluster: &MeasurementCluster,
    cfg: &FilterConfig,
    frame: &dyn StateFrame,
) -> Result<(GaussianComponent, f64), UkfError> {
    let mean_state = ObjectState::from_vector(&comp.mean);
    let rect = OrientedRectangle::from_state(&mean_state, frame).map_err(|_| UkfError::StateCovariance)?;
    let plan = meas_model::plan(&rect, cluster.points(), &cfg.shape);
    // sigma points that leave the road model fall back to the mean's image
    let fallback = meas_model::predict_with_plan(&rect, mean_state.v, cluster, &plan, cfg.shape.spacing);
    let h = |x: &StateVector| {
        let st = ObjectState::from_vector(x);
        match OrientedRectangle::from_state(&st, frame) {
            Ok(r) => meas_model::predict_with_plan(&r, st.v, cluster, &plan, cfg.shape.spacing),
            Err(_) => fallback.clone(),
        }
    };
    let z = cluster.measurement_vector();
    let r = noise_diagonal(cluster, cfg);
    let u = ukf::update(&cfg.ukf, &comp.mean, &comp.cov, &z, &r, h)?;
    let mut mean = u.mean;
    cfg.clamp_state(&mut mean);
    Ok((GaussianComponent::new(comp.weight, mean, u.cov), u.log_likelihood))
}

/// Whether the cluster centroid is close enough to the component's
/// predicted rectangle to be considered for an update.
pub fn gate(
    comp: &GaussianComponent,
    cluster: &MeasurementCluster,
    cfg: &FilterConfig,
    frame: &dyn StateFrame,
) -> bool {
    let st = ObjectState::from_vector(&comp.mean);
    let Ok(rect) = OrientedRectangle::from_state(&st, frame) else {
        return false;
    };
    let sigma = comp.cov[(IDX_S, IDX_S)].max(comp.cov[(IDX_N, IDX_N)]).sqrt();
    let c = cluster.centroid();
    let dist = if rect.contains(&c) {
        0.0
    } else {
        rect.boundary_distance(&c)
    };
    dist <= cfg.gate_margin + 3.0 * sigma
}

/// Missed-detection weight factor `1 − P_D (1 − e^{−γ})`.
pub fn missed_detection_factor(cfg: &FilterConfig) -> f64 {
    1.0 - cfg.p_detection * (1.0 - (-cfg.gamma).exp())
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln(P_D Γ L)` without the component weight, given the Gaussian
/// log-likelihood of a cluster of `size` points.
pub fn log_detection_term(log_likelihood: f64, size: usize, cfg: &FilterConfig) -> f64 {
    let k = size as f64;
    let log_gamma = -cfg.gamma + k * cfg.gamma.ln();
    let log_clutter = -k * (cfg.clutter_rate * cfg.clutter_density).ln();
    cfg.p_detection.ln() + log_gamma + log_likelihood + log_clutter
}

#[derive(Debug, Clone)]
pub struct UpdateOutcome {
    pub mixture: Vec<GaussianComponent>,
    /// Indices of clusters that no component explained.
    pub disregarded: Vec<usize>,
}

/// Posterior mixture: missed-detection copies of every component plus, for
/// each cluster, the gated components updated by that cluster with
/// normalized weights.
pub fn update(
    mixture: &[GaussianComponent],
    clusters: &[MeasurementCluster],
    cfg: &FilterConfig,
    frame: &dyn StateFrame,
) -> UpdateOutcome {
    let nd = missed_detection_factor(cfg);
    let mut out: Vec<GaussianComponent> = mixture
        .iter()
        .map(|c| GaussianComponent {
            weight: c.weight * nd,
            ..c.clone()
        })
        .collect();
    let mut disregarded = Vec::new();
    for (ci, cluster) in clusters.iter().enumerate() {
        let mut updated: Vec<(GaussianComponent, f64)> = Vec::new();
        for comp in mixture.iter().filter(|c| c.weight > 0.0) {
            if !gate(comp, cluster, cfg, frame) {
                continue;
            }
            match ukf_update_component(comp, cluster, cfg, frame) {
                Ok((c, ll)) => {
                    let term = comp.weight.ln() + log_detection_term(ll, cluster.len(), cfg);
                    updated.push((c, term));
                }
                Err(e) => log::debug!("update of component rejected for cluster {ci}: {e}"),
            }
        }
        let log_delta = if cluster.len() == 1 { 0.0 } else { f64::NEG_INFINITY };
        let log_den = log_sum_exp(std::iter::once(log_delta).chain(updated.iter().map(|u| u.1)));
        if updated.is_empty() || !log_den.is_finite() {
            if !updated.is_empty() {
                log::debug!("cluster {ci} has vanishing evidence for every component");
            }
            disregarded.push(ci);
            continue;
        }
        let mass: f64 = updated.iter().map(|u| (u.1 - log_den).exp()).sum();
        if mass < cfg.disregard_mass {
            disregarded.push(ci);
        }
        for (mut c, term) in updated {
            c.weight = (term - log_den).exp();
            out.push(c);
        }
    }
    UpdateOutcome {
        mixture: out,
        disregarded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::ClusterTag;
    use crate::meas_model::sort_ccw;
    use crate::road::{CartesianFrame, EgoPose};
    use crate::state::StateMatrix;
    use nalgebra::Vector2;

    fn frame() -> CartesianFrame {
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

    fn comp(w: f64, x: f64, y: f64) -> GaussianComponent {
        let st = ObjectState {
            s: x,
            n: y,
            v: 0.0,
            xi: 0.0,
            xi_rate: 0.0,
            length: 4.8,
            width: 2.0,
        };
        let cov = StateMatrix::from_diagonal(&[0.3, 0.3, 1.0, 0.01, 0.01, 0.1, 0.05].into());
        GaussianComponent::new(w, st.to_vector(), cov)
    }

    fn rear_cluster(x: f64, y: f64, n: usize) -> MeasurementCluster {
        let pts = (0..n)
            .map(|i| Vector2::new(x - 2.4, y - 0.9 + 1.8 * i as f64 / (n - 1) as f64))
            .collect();
        sort_ccw(MeasurementCluster::new(pts, ClusterTag::LidarOnly))
    }

    #[test]
    fn no_clusters_scales_weights() {
        let cfg = FilterConfig::default();
        let out = update(&[comp(0.8, 10.0, 0.0)], &[], &cfg, &frame());
        assert_eq!(out.mixture.len(), 1);
        assert!((out.mixture[0].weight - 0.8 * missed_detection_factor(&cfg)).abs() < 1e-15);
    }

    #[test]
    fn matching_cluster_leaves_mean() {
        let cfg = FilterConfig {
            sigma_r: 1e-3,
            ..FilterConfig::default()
        };
        let c = comp(1.0, 10.0, 0.0);
        let (u, _) = ukf_update_component(&c, &rear_cluster(10.0, 0.0, 8), &cfg, &frame()).unwrap();
        assert!((u.mean - c.mean).amax() < 1e-3, "{}", u.mean - c.mean);
    }

    #[test]
    fn single_component_takes_unit_weight() {
        let cfg = FilterConfig::default();
        let out = update(&[comp(1.0, 10.0, 0.0)], &[rear_cluster(10.0, 0.0, 8)], &cfg, &frame());
        assert_eq!(out.mixture.len(), 2);
        assert!((out.mixture[1].weight - 1.0).abs() < 1e-12);
        assert!(out.disregarded.is_empty());
    }

    #[test]
    fn weights_follow_formula() {
        let cfg = FilterConfig {
            gate_margin: 100.0,
            ..Default::default()
        };
        let f = frame();
        let a = comp(0.6, 10.0, 0.0);
        let b = comp(0.4, 11.0, 0.5);
        let cluster = rear_cluster(10.0, 0.0, 6);
        let out = update(&[a.clone(), b.clone()], std::slice::from_ref(&cluster), &cfg, &f);
        let (_, la) = ukf_update_component(&a, &cluster, &cfg, &f).unwrap();
        let (_, lb) = ukf_update_component(&b, &cluster, &cfg, &f).unwrap();
        let ta = 0.6f64.ln() + log_detection_term(la, 6, &cfg);
        let tb = 0.4f64.ln() + log_detection_term(lb, 6, &cfg);
        let expected_ratio = (ta - tb).exp();
        let ratio = out.mixture[2].weight / out.mixture[3].weight;
        assert!(out.mixture[2].weight > out.mixture[3].weight);
        assert!((ratio / expected_ratio - 1.0).abs() < 1e-9);
        let total: f64 = out.mixture[2..].iter().map(|c| c.weight).sum();
        assert!(total <= 1.0 + 1e-12);
    }

    #[test]
    fn singleton_cluster_uses_delta_term() {
        let cfg = FilterConfig::default();
        let f = frame();
        let c = comp(1.0, 10.0, 0.0);
        let cluster = sort_ccw(MeasurementCluster::new(
            vec![Vector2::new(7.6, 0.0)],
            ClusterTag::LidarOnly,
        ));
        let out = update(std::slice::from_ref(&c), std::slice::from_ref(&cluster), &cfg, &f);
        let (_, ll) = ukf_update_component(&c, &cluster, &cfg, &f).unwrap();
        let x = log_detection_term(ll, 1, &cfg).exp();
        assert!((out.mixture[1].weight - x / (1.0 + x)).abs() < 1e-12);
    }

    #[test]
    fn far_cluster_is_disregarded() {
        let cfg = FilterConfig::default();
        let out = update(&[comp(1.0, 10.0, 0.0)], &[rear_cluster(40.0, 0.0, 5)], &cfg, &frame());
        assert_eq!(out.disregarded, vec![0]);
        assert_eq!(out.mixture.len(), 1);
    }

    fn per_point_log_density(cluster: &MeasurementCluster, y: &DVector<f64>, cfg: &FilterConfig) -> f64 {
        let dim = cluster.point_dim();
        let r = noise_diagonal(cluster, cfg);
        let z = cluster.measurement_vector();
        (0..cluster.len())
            .map(|i| {
                (0..dim)
                    .map(|k| {
                        let j = dim * i + k;
                        -0.5 * ((2.0 * std::f64::consts::PI * r[j]).ln() + (z[j] - y[j]).powi(2) / r[j])
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    #[test]
    fn joint_gaussian_factorizes_per_point() {
        use rand::{RngExt, SeedableRng};
        let cfg = FilterConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = rng.random_range(1..20);
            let pts = (0..n)
                .map(|_| Vector2::new(rng.random_range(5.0..8.0), rng.random_range(-2.0..2.0)))
                .collect();
            let mut cluster = MeasurementCluster::new(pts, ClusterTag::LidarOnly);
            if rng.random_bool(0.5) {
                cluster = cluster.fused(Vector2::new(rng.random_range(0.0..20.0), 0.0));
            }
            let cluster = sort_ccw(cluster);
            let y = DVector::from_fn(cluster.point_dim() * n, |_, _| rng.random_range(-1.0..9.0));
            let z = cluster.measurement_vector();
            let s = nalgebra::DMatrix::from_diagonal(&noise_diagonal(&cluster, &cfg));
            let chol = s.cholesky().unwrap();
            let innov = &z - &y;
            let joint = -0.5
                * (z.len() as f64 * (2.0 * std::f64::consts::PI).ln()
                    + 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>()
                    + innov.dot(&chol.solve(&innov)));
            let product = per_point_log_density(&cluster, &y, &cfg);
            assert!(
                (joint - product).abs() < 1e-9 * product.abs().max(1.0),
                "{joint} {product}"
            );
        }
    }

    #[test]
    fn certain_state_likelihood_is_per_point_product() {
        let cfg = FilterConfig::default();
        let mut c = comp(1.0, 10.0, 0.0);
        c.cov = StateMatrix::identity() * 1e-20;
        let cluster = rear_cluster(10.0, 0.0, 7);
        let (_, ll) = ukf_update_component(&c, &cluster, &cfg, &frame()).unwrap();
        let rect = OrientedRectangle::from_state(&ObjectState::from_vector(&c.mean), &frame()).unwrap();
        let plan = meas_model::plan(&rect, cluster.points(), &cfg.shape);
        let y = meas_model::predict_with_plan(&rect, 0.0, &cluster, &plan, cfg.shape.spacing);
        let product = per_point_log_density(&cluster, &y, &cfg);
        assert!((ll - product).abs() < 1e-9, "{ll} {product}");
    }
}
