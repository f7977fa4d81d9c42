use rand::Rng;

use super::{debias, ProtocolParams, SupportCounts};
use crate::model::FrequencyVector;

/// Subset selection: report a size-k subset that contains the true value
/// with probability σ_k.
#[derive(Debug, Clone)]
pub struct SubsetSelection {
    params: ProtocolParams,
    sigma: f64,
    theta: f64,
}

impl SubsetSelection {
    pub fn new(params: ProtocolParams) -> Self {
        let (sigma, theta) = (params.ss_sigma(), params.ss_theta());
        assert!(sigma > theta, "sigma_k must exceed theta_k for epsilon > 0");
        SubsetSelection {
            params,
            sigma,
            theta,
        }
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    /// Returns the subset sorted ascending.
    pub fn perturb<R: Rng + ?Sized>(&self, value: usize, rng: &mut R) -> Vec<usize> {
        let d = self.params.domain_size();
        let k = self.params.subset_size();
        let include = rng.random::<f64>() < self.sigma;
        let picks = if include { k - 1 } else { k };

        // Partial Fisher-Yates over the domain without `value`.
        let mut pool: Vec<usize> = (0..d).filter(|&x| x != value).collect();
        for i in 0..picks {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        pool.truncate(picks);
        if include {
            pool.push(value);
        }
        pool.sort_unstable();
        pool
    }

    /// `f̂(v) = (Sup(v) − n θ_k) / ((σ_k − θ_k) n)`
    pub fn estimate(&self, counts: &SupportCounts) -> FrequencyVector {
        debias(counts, self.sigma, self.theta)
    }
}
