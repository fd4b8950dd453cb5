//! Mixture reduction and estimate extraction.

use serde::{Deserialize, Serialize};

use super::GaussianComponent;
use crate::angle;
use crate::state::{ObjectState, StateMatrix, StateVector, IDX_XI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReduceConfig {
    pub prune_threshold: f64,
    /// Squared Mahalanobis distance below which components are merged.
    pub merge_threshold: f64,
    pub max_components: usize,
    pub extract_threshold: f64,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        ReduceConfig {
            prune_threshold: 1e-5,
            merge_threshold: 4.0,
            max_components: 100,
            extract_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reduced {
    pub mixture: Vec<GaussianComponent>,
    /// Weight removed by pruning and capping.
    pub pruned_mass: f64,
}

fn residual(a: &StateVector, b: &StateVector) -> StateVector {
    let mut d = a - b;
    d[IDX_XI] = angle::wrap(d[IDX_XI]);
    d
}

/// Moment-preserving merge of `parts` about the first component's yaw.
pub fn merge(parts: &[&GaussianComponent]) -> GaussianComponent {
    let w: f64 = parts.iter().map(|c| c.weight).sum();
    let anchor = parts[0].mean;
    let mut offset = StateVector::zeros();
    for c in parts {
        offset += c.weight * residual(&c.mean, &anchor);
    }
    offset /= w;
    let mut mean = anchor + offset;
    mean[IDX_XI] = angle::wrap(mean[IDX_XI]);
    let mut cov = StateMatrix::zeros();
    for c in parts {
        let d = residual(&c.mean, &mean);
        cov += c.weight * (c.cov + d * d.transpose());
    }
    GaussianComponent::new(w, mean, cov / w)
}

/// Prunes, merges and caps the mixture.
pub fn reduce(mixture: Vec<GaussianComponent>, cfg: &ReduceConfig) -> Reduced {
    let mut pruned_mass = 0.0;
    let mut pool: Vec<GaussianComponent> = Vec::with_capacity(mixture.len());
    for c in mixture {
        if c.weight < cfg.prune_threshold {
            pruned_mass += c.weight;
        } else {
            pool.push(c);
        }
    }
    // heaviest first; merge candidates are judged against their own covariance
    pool.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    let inverses: Vec<Option<StateMatrix>> = pool.iter().map(|c| c.cov.cholesky().map(|ch| ch.inverse())).collect();
    let mut used = vec![false; pool.len()];
    let mut out = Vec::new();
    for j in 0..pool.len() {
        if used[j] {
            continue;
        }
        let mut group = Vec::new();
        for i in j..pool.len() {
            if used[i] {
                continue;
            }
            let close = i == j
                || inverses[i].as_ref().is_some_and(|inv| {
                    let d = residual(&pool[i].mean, &pool[j].mean);
                    (d.transpose() * inv * d)[0] < cfg.merge_threshold
                });
            if close {
                used[i] = true;
                group.push(&pool[i]);
            }
        }
        out.push(if group.len() == 1 {
            group[0].clone()
        } else {
            merge(&group)
        });
    }
    out.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    if out.len() > cfg.max_components {
        pruned_mass += out[cfg.max_components..].iter().map(|c| c.weight).sum::<f64>();
        out.truncate(cfg.max_components);
    }
    Reduced {
        mixture: out,
        pruned_mass,
    }
}

/// One extracted object estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub state: ObjectState,
    pub covariance: StateMatrix,
    pub weight: f64,
}

/// Components above the extraction threshold, and the expected cardinality
/// `round(Σw)`.
pub fn extract(mixture: &[GaussianComponent], cfg: &ReduceConfig) -> (Vec<Estimate>, usize) {
    let estimates = mixture
        .iter()
        .filter(|c| c.weight > cfg.extract_threshold)
        .map(|c| Estimate {
            state: ObjectState::from_vector(&c.mean),
            covariance: c.cov,
            weight: c.weight,
        })
        .collect();
    let mass: f64 = mixture.iter().map(|c| c.weight).sum();
    (estimates, mass.round() as usize)
}
