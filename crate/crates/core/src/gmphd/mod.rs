//! GM-PHD filter for extended objects with unscented moment propagation.
//!
//! Each step predicts surviving components with the constant turn rate
//! model, appends birth components, updates with the sorted measurement
//! clusters of the frame, reduces the mixture and extracts estimates.

mod birth;
mod motion;
mod reduce;
mod ukf;
mod update;

pub use birth::{make_birth, to_cartesian, BirthConfig, BirthModel};
pub use motion::{predict_state, ProcessNoise, TURN_RATE_EPS};
pub use reduce::{extract, merge, reduce, Estimate, ReduceConfig, Reduced};
pub use ukf::{transform_state, update as ukf_update, SigmaPoints, UkfError, UkfParams, UkfUpdate, MAX_CONDITION};
pub use update::{
    gate, log_detection_term, missed_detection_factor, noise_diagonal, ukf_update_component, update, UpdateOutcome,
};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::{FusionConfig, MeasurementCluster};
use crate::meas_model::ShapeConfig;
use crate::road::{CartesianFrame, ConversionConfig, RoadError, RoadFrame, StateFrame};
use crate::state::{ObjectState, StateMatrix, StateVector, IDX_LENGTH, IDX_V, IDX_WIDTH, IDX_XI};

/// Smallest eigenvalue kept when a covariance has to be repaired.
pub const COVARIANCE_FLOOR: f64 = 1e-12;

/// Weighted Gaussian term of the intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: StateVector,
    pub cov: StateMatrix,
}

impl GaussianComponent {
    /// Symmetrizes the covariance and floors its eigenvalues when it is not
    /// positive definite.
    pub fn new(weight: f64, mut mean: StateVector, cov: StateMatrix) -> Self {
        mean[IDX_XI] = crate::angle::wrap(mean[IDX_XI]);
        GaussianComponent {
            weight: weight.max(0.0),
            mean,
            cov: repair_covariance(cov),
        }
    }

    pub fn state(&self) -> ObjectState {
        ObjectState::from_vector(&self.mean)
    }
}

/// Symmetric positive definite version of `cov`.
pub fn repair_covariance(cov: StateMatrix) -> StateMatrix {
    let sym = 0.5 * (cov + cov.transpose());
    if sym.cholesky().is_some() {
        return sym;
    }
    let eig = sym.symmetric_eigen();
    let floored = eig.eigenvalues.map(|e| e.max(COVARIANCE_FLOOR));
    log::debug!("covariance repaired, smallest eigenvalue {:.3e}", eig.eigenvalues.min());
    let r = eig.eigenvectors * StateMatrix::from_diagonal(&floored) * eig.eigenvectors.transpose();
    0.5 * (r + r.transpose())
}

/// State parameterization used by the filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    #[default]
    Curvilinear,
    CartesianBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub mode: FilterMode,
    pub p_survival: f64,
    pub p_detection: f64,
    /// Expected number of measurements per object.
    pub gamma: f64,
    /// Expected clutter points per frame.
    pub clutter_rate: f64,
    /// Clutter spatial density (1/m²).
    pub clutter_density: f64,
    /// Lidar position noise (m).
    pub sigma_r: f64,
    /// Radar velocity noise (m/s).
    pub sigma_v: f64,
    /// Counts the radar velocity of a fused cluster once rather than once per
    /// point, by scaling its per-point variance with the cluster size.
    pub share_radar_velocity: bool,
    pub process_noise: ProcessNoise,
    pub ukf: UkfParams,
    pub reduce: ReduceConfig,
    pub birth: BirthConfig,
    pub shape: ShapeConfig,
    /// Nominal frame interval (s), used for the first frame.
    pub dt: f64,
    pub min_extent: f64,
    pub max_extent: f64,
    pub max_speed: f64,
    /// Extra distance (m) beyond three positional standard deviations within
    /// which a cluster is considered for a component.
    pub gate_margin: f64,
    /// Clusters whose updated mass stays below this seed births.
    pub disregard_mass: f64,
    /// Bearing bin of the visibility filter (deg).
    pub visibility_bin_deg: f64,
    pub fusion: FusionConfig,
    pub conversion: ConversionConfig,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            mode: FilterMode::Curvilinear,
            p_survival: 0.99,
            p_detection: 0.9,
            gamma: 8.0,
            clutter_rate: 5.0,
            clutter_density: 1e-3,
            sigma_r: 0.05,
            sigma_v: 0.5,
            share_radar_velocity: true,
            process_noise: ProcessNoise::default(),
            ukf: UkfParams::default(),
            reduce: ReduceConfig::default(),
            birth: BirthConfig::default(),
            shape: ShapeConfig::default(),
            dt: 0.1,
            min_extent: 0.5,
            max_extent: 15.0,
            max_speed: 70.0,
            gate_margin: 1.0,
            disregard_mass: 0.5,
            visibility_bin_deg: 0.5,
            fusion: FusionConfig::default(),
            conversion: ConversionConfig::default(),
        }
    }
}

impl FilterConfig {
    /// Checks ranges of probabilities and thresholds.
    pub fn validate(&self) -> Result<(), String> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(format!("{name} must lie in (0, 1], got {v}"))
            }
        };
        unit("p_survival", self.p_survival)?;
        unit("p_detection", self.p_detection)?;
        let positive = [
            ("gamma", self.gamma),
            ("clutter_rate", self.clutter_rate),
            ("clutter_density", self.clutter_density),
            ("sigma_r", self.sigma_r),
            ("sigma_v", self.sigma_v),
            ("dt", self.dt),
            ("min_extent", self.min_extent),
            ("max_speed", self.max_speed),
            ("gate_margin", self.gate_margin),
            ("reduce.prune_threshold", self.reduce.prune_threshold),
            ("reduce.merge_threshold", self.reduce.merge_threshold),
            ("reduce.extract_threshold", self.reduce.extract_threshold),
            ("ukf.alpha", self.ukf.alpha),
            ("visibility_bin_deg", self.visibility_bin_deg),
            ("fusion.cluster_eps", self.fusion.cluster_eps),
            ("conversion.step", self.conversion.step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.max_extent <= self.min_extent {
            return Err("max_extent must exceed min_extent".into());
        }
        if self.fusion.max_points < 2 {
            return Err("fusion.max_points must be at least 2".into());
        }
        if self.reduce.max_components == 0 {
            return Err("reduce.max_components must be positive".into());
        }
        Ok(())
    }

    /// Clips extent and speed of a state vector to the configured bounds.
    pub fn clamp_state(&self, x: &mut StateVector) {
        x[IDX_LENGTH] = x[IDX_LENGTH].clamp(self.min_extent, self.max_extent);
        x[IDX_WIDTH] = x[IDX_WIDTH].clamp(self.min_extent, self.max_extent);
        x[IDX_V] = x[IDX_V].clamp(-self.max_speed, self.max_speed);
    }
}

/// Propagates the mixture by `dt`, scales weights by `P_S` and appends the
/// births.
pub fn predict(
    mixture: &[GaussianComponent],
    births: impl IntoIterator<Item = GaussianComponent>,
    cfg: &FilterConfig,
    dt: f64,
) -> Vec<GaussianComponent> {
    let q = cfg.process_noise.covariance(dt);
    let mut out: Vec<GaussianComponent> = mixture
        .iter()
        .map(|c| {
            let f = |x: &StateVector| predict_state(&ObjectState::from_vector(x), dt).to_vector();
            let (mean, cov) = match transform_state(&cfg.ukf, &c.mean, &c.cov, f) {
                Some(mc) => mc,
                None => {
                    log::debug!("sigma points unavailable, propagating the mean only");
                    (f(&c.mean), c.cov)
                }
            };
            GaussianComponent::new(c.weight * cfg.p_survival, mean, cov + q)
        })
        .collect();
    out.extend(births);
    out
}

/// The state frame of either parameterization.
pub enum ActiveFrame<'a, 'r> {
    Road(&'a RoadFrame<'r>),
    Cartesian(CartesianFrame),
}

impl StateFrame for ActiveFrame<'_, '_> {
    fn ego(&self) -> &crate::road::EgoPose {
        match self {
            ActiveFrame::Road(f) => StateFrame::ego(*f),
            ActiveFrame::Cartesian(f) => f.ego(),
        }
    }

    fn position_to_vehicle(&self, s: f64, n: f64) -> Result<Vector2<f64>, RoadError> {
        match self {
            ActiveFrame::Road(f) => f.position_to_vehicle(s, n),
            ActiveFrame::Cartesian(f) => f.position_to_vehicle(s, n),
        }
    }

    fn vehicle_to_position(&self, p: &Vector2<f64>) -> Option<(f64, f64)> {
        match self {
            ActiveFrame::Road(f) => f.vehicle_to_position(p),
            ActiveFrame::Cartesian(f) => f.vehicle_to_position(p),
        }
    }

    fn reference_heading(&self, s: f64) -> Result<f64, RoadError> {
        match self {
            ActiveFrame::Road(f) => f.reference_heading(s),
            ActiveFrame::Cartesian(f) => f.reference_heading(s),
        }
    }

    fn reference_curvature(&self, s: f64) -> Result<f64, RoadError> {
        match self {
            ActiveFrame::Road(f) => f.reference_curvature(s),
            ActiveFrame::Cartesian(f) => f.reference_curvature(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("frame time {t} does not follow previous frame time {previous}")]
    NonMonotonicTime { previous: f64, t: f64 },
    #[error(transparent)]
    Road(#[from] RoadError),
}

/// Inputs of one filter step.
pub struct FrameInput<'a, 'r> {
    pub t: f64,
    /// Sorted clusters; empty when no lidar scan is available.
    pub clusters: &'a [MeasurementCluster],
    pub lidar_present: bool,
    pub road_frame: &'a RoadFrame<'r>,
    /// World position of the sensor origin, used by the cartesian baseline.
    pub ego_world: Vector2<f64>,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub estimates: Vec<Estimate>,
    pub cardinality: usize,
    pub mass: f64,
    pub components: usize,
    pub pruned_mass: f64,
}

/// Filter state carried between frames.
#[derive(Debug, Clone)]
pub struct GmPhdFilter {
    config: FilterConfig,
    mixture: Vec<GaussianComponent>,
    pending_births: Vec<GaussianComponent>,
    last_time: Option<f64>,
    last_estimates: Vec<Estimate>,
}

impl GmPhdFilter {
    pub fn new(config: FilterConfig) -> Self {
        GmPhdFilter {
            config,
            mixture: Vec::new(),
            pending_births: Vec::new(),
            last_time: None,
            last_estimates: Vec::new(),
        }
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn mixture(&self) -> &[GaussianComponent] {
        &self.mixture
    }

    pub fn last_time(&self) -> Option<f64> {
        self.last_time
    }

    /// Previous estimates propagated to time `t`, heaviest first, for
    /// track-gated clustering.
    pub fn predicted_tracks(&self, t: f64) -> Vec<ObjectState> {
        let dt = self.last_time.map_or(0.0, |t0| (t - t0).max(0.0));
        let mut order: Vec<&Estimate> = self.last_estimates.iter().collect();
        order.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        order
            .into_iter()
            .map(|e| if dt > 0.0 { predict_state(&e.state, dt) } else { e.state })
            .collect()
    }

    /// State frame matching the configured parameterization.
    pub fn state_frame<'a, 'r>(&self, road_frame: &'a RoadFrame<'r>, ego_world: Vector2<f64>) -> ActiveFrame<'a, 'r> {
        match self.config.mode {
            FilterMode::Curvilinear => ActiveFrame::Road(road_frame),
            FilterMode::CartesianBaseline => ActiveFrame::Cartesian(CartesianFrame::new(*road_frame.ego(), ego_world)),
        }
    }

    fn births_for_mode(&self, comps: Vec<GaussianComponent>, road_frame: &RoadFrame<'_>) -> Vec<GaussianComponent> {
        match self.config.mode {
            FilterMode::Curvilinear => comps,
            FilterMode::CartesianBaseline => comps
                .iter()
                .filter_map(|c| to_cartesian(c, road_frame.road()))
                .collect(),
        }
    }

    /// Predict, update, reduce and extract for one frame.
    pub fn step(&mut self, input: &FrameInput<'_, '_>) -> Result<StepOutput, FilterError> {
        let dt = match self.last_time {
            Some(t0) if input.t <= t0 => {
                return Err(FilterError::NonMonotonicTime {
                    previous: t0,
                    t: input.t,
                })
            }
            Some(t0) => input.t - t0,
            None => self.config.dt,
        };
        let cfg = &self.config;
        let road_births = make_birth(input.road_frame, &[], &cfg.birth).road_components;
        let mut births = self.births_for_mode(road_births, input.road_frame);
        let q = cfg.process_noise.covariance(dt);
        births.extend(self.pending_births.drain(..).map(|b| {
            let mean = predict_state(&b.state(), dt).to_vector();
            GaussianComponent::new(b.weight, mean, b.cov + q)
        }));
        let predicted = predict(&self.mixture, births, cfg, dt);

        let frame = self.state_frame(input.road_frame, input.ego_world);
        let (posterior, disregarded) = if input.lidar_present && !input.clusters.is_empty() {
            let out = update(&predicted, input.clusters, cfg, &frame);
            (out.mixture, out.disregarded)
        } else {
            (predicted, Vec::new())
        };
        let reduced = reduce(posterior, &cfg.reduce);
        let (estimates, cardinality) = extract(&reduced.mixture, &cfg.reduce);
        let mass = reduced.mixture.iter().map(|c| c.weight).sum();

        let leftovers: Vec<MeasurementCluster> = disregarded.iter().map(|&i| input.clusters[i].clone()).collect();
        let seeded = make_birth(input.road_frame, &leftovers, &cfg.birth).measurement_components;
        self.pending_births = self.births_for_mode(seeded, input.road_frame);

        let components = reduced.mixture.len();
        self.mixture = reduced.mixture;
        self.last_time = Some(input.t);
        self.last_estimates = estimates.clone();
        Ok(StepOutput {
            estimates,
            cardinality,
            mass,
            components,
            pruned_mass: reduced.pruned_mass,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn comp(w: f64) -> GaussianComponent {
        let st = ObjectState {
            s: 10.0,
            n: 1.0,
            v: 12.0,
            xi: 0.1,
            xi_rate: 0.0,
            length: 4.8,
            width: 2.0,
        };
        GaussianComponent::new(w, st.to_vector(), StateMatrix::identity() * 0.01)
    }

    #[test]
    fn empty_mixture_gets_birth_mass() {
        let cfg = FilterConfig::default();
        let out = predict(&[], vec![comp(0.1), comp(0.1)], &cfg, 0.1);
        let mass: f64 = out.iter().map(|c| c.weight).sum();
        assert!((mass - 0.2).abs() < 1e-15);
    }

    #[test]
    fn mass_after_prediction() {
        let cfg = FilterConfig::default();
        let out = predict(&[comp(0.7), comp(0.2)], vec![comp(0.05)], &cfg, 0.1);
        let mass: f64 = out.iter().map(|c| c.weight).sum();
        assert!((mass - (0.99 * 0.9 + 0.05)).abs() < 1e-12);
    }

    #[test]
    fn straight_prediction_without_noise_is_exact() {
        let cfg = FilterConfig {
            process_noise: ProcessNoise {
                accel_std: 0.0,
                yaw_accel_std: 0.0,
                position_std: 0.0,
                extent_std: 0.0,
            },
            ..Default::default()
        };
        let mut c = comp(1.0);
        c.cov = StateMatrix::identity() * 1e-12;
        let out = predict(std::slice::from_ref(&c), Vec::new(), &cfg, 0.1);
        let expect = predict_state(&c.state(), 0.1).to_vector();
        assert!((out[0].mean - expect).amax() < 1e-9);
    }

    #[test]
    fn curved_prediction_matches_monte_carlo() {
        let cfg = FilterConfig::default();
        let mut c = comp(1.0);
        c.mean[4] = 0.5;
        c.cov = StateMatrix::from_diagonal(&[0.5, 0.3, 4.0, 0.2, 0.3, 0.1, 0.05].into());
        let dt = 0.5;
        let out = predict(std::slice::from_ref(&c), Vec::new(), &cfg, dt);
        let chol = c.cov.cholesky().unwrap().l();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mut acc = StateVector::zeros();
        for _ in 0..n {
            let e = StateVector::from_fn(|_, _| StandardNormal.sample(&mut rng));
            let x = c.mean + chol * e;
            acc += predict_state(&ObjectState::from_vector(&x), dt).to_vector();
        }
        let mc = acc / n as f64;
        for i in [0, 1, 3] {
            let scale = mc[i].abs().max(1.0);
            assert!(
                (out[0].mean[i] - mc[i]).abs() / scale < 0.02,
                "slot {i}: {} vs {}",
                out[0].mean[i],
                mc[i]
            );
        }
    }

    #[test]
    fn repair_restores_definiteness() {
        let mut bad = StateMatrix::identity();
        bad[(0, 0)] = -1e-3;
        bad[(0, 1)] = 0.2;
        let r = repair_covariance(bad);
        assert!(r.cholesky().is_some());
        assert_eq!(r, r.transpose());
    }

    #[test]
    fn default_config_is_valid() {
        assert!(FilterConfig::default().validate().is_ok());
        let bad = FilterConfig {
            p_detection: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
