use rand::Rng;

use super::{debias, ProtocolParams, SupportCounts};
use crate::model::FrequencyVector;

/// Generalized randomized response.
#[derive(Debug, Clone)]
pub struct Grr {
    params: ProtocolParams,
    p: f64,
}

impl Grr {
    pub fn new(params: ProtocolParams) -> Self {
        Grr {
            p: params.grr_p(),
            params,
        }
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    /// Keeps `value` with probability p, otherwise reports one of the other
    /// d − 1 values uniformly.
    pub fn perturb<R: Rng + ?Sized>(&self, value: usize, rng: &mut R) -> usize {
        if rng.random::<f64>() < self.p {
            return value;
        }
        let other = rng.random_range(0..self.params.domain_size() - 1);
        if other >= value {
            other + 1
        } else {
            other
        }
    }

    pub fn estimate(&self, counts: &SupportCounts) -> FrequencyVector {
        debias(counts, self.p, self.params.grr_q())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_rng, PrivacyBudget};

    fn grr(eps: f64, d: usize) -> Grr {
        Grr::new(ProtocolParams::new(PrivacyBudget::new(eps).unwrap(), d).unwrap())
    }

    #[test]
    fn ln3_probabilities() {
        let g = grr(3f64.ln(), 3);
        assert!((g.params().grr_p() - 0.6).abs() < 1e-12);
        assert!((g.params().grr_q() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn huge_epsilon_is_identity() {
        let g = grr(50.0, 5);
        let mut rng = derive_rng(1, 0, 0);
        assert!((0..10_000).all(|i| g.perturb(i % 5, &mut rng) == i % 5));
    }

    #[test]
    fn empirical_histogram_matches_multinomial() {
        let g = grr(3f64.ln(), 3);
        let draws = 100_000;
        let mut rng = derive_rng(2, 0, 0);
        let mut hist = [0usize; 3];
        for _ in 0..draws {
            hist[g.perturb(1, &mut rng)] += 1;
        }
        for (y, expected) in [(0, 0.2), (1, 0.6), (2, 0.2)] {
            let sd = (draws as f64 * expected * (1.0 - expected)).sqrt();
            let dev = (hist[y] as f64 - draws as f64 * expected).abs();
            assert!(
                dev < 3.0 * sd,
                "output {y}: {} vs {}",
                hist[y],
                draws as f64 * expected
            );
        }
    }

    #[test]
    fn estimator_examples() {
        let g = grr(3f64.ln(), 3);
        let c = SupportCounts::from_parts(vec![60, 20, 20], 100).unwrap();
        let f = g.estimate(&c);
        assert!((f[0] - 1.0).abs() < 1e-12);
        assert!(f[1].abs() < 1e-12);
        assert!((f.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn estimates_sum_to_one_whenever_counts_sum_to_n() {
        let g = grr(0.7, 5);
        let c = SupportCounts::from_parts(vec![3, 0, 11, 5, 1], 20).unwrap();
        assert!((g.estimate(&c).total() - 1.0).abs() < 1e-12);
    }
}
