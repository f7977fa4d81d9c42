//! Unary-encoding protocols: the value is one-hot encoded and every bit is
//! randomized independently.

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;

use super::{BitVector, ProtocolParams, SupportCounts};
use crate::model::FrequencyVector;

/// Per-bit randomizer: `P[1 | 1] = on`, `P[1 | 0] = off`.
#[derive(Debug, Clone)]
struct BitFlipper {
    on: Bernoulli,
    off: Bernoulli,
}

impl BitFlipper {
    fn new(on: f64, off: f64) -> Self {
        BitFlipper {
            on: Bernoulli::new(on).expect("probability in [0, 1]"),
            off: Bernoulli::new(off).expect("probability in [0, 1]"),
        }
    }

    fn perturb<R: Rng + ?Sized>(&self, d: usize, value: usize, rng: &mut R) -> BitVector {
        let mut out = BitVector::zeros(d);
        for i in 0..d {
            let dist = if i == value { &self.on } else { &self.off };
            if dist.sample(rng) {
                out.set(i, true);
            }
        }
        out
    }
}

/// RAPPOR with unary encoding (no Bloom filter); each bit is kept with
/// probability α = e^{ε/2} / (e^{ε/2} + 1).
#[derive(Debug, Clone)]
pub struct Rappor {
    params: ProtocolParams,
    alpha: f64,
    flipper: BitFlipper,
}

impl Rappor {
    pub fn new(params: ProtocolParams) -> Self {
        let alpha = params.rappor_alpha();
        Rappor {
            params,
            alpha,
            flipper: BitFlipper::new(alpha, 1.0 - alpha),
        }
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn perturb<R: Rng + ?Sized>(&self, value: usize, rng: &mut R) -> BitVector {
        self.flipper.perturb(self.params.domain_size(), value, rng)
    }

    /// `f̂(v) = (C[v] + n(α − 1)) / ((2α − 1) n)`
    pub fn estimate(&self, counts: &SupportCounts) -> FrequencyVector {
        let n = counts.reports() as f64;
        let a = self.alpha;
        counts
            .counts()
            .iter()
            .map(|&c| (c as f64 + n * (a - 1.0)) / ((2.0 * a - 1.0) * n))
            .collect::<Vec<_>>()
            .into()
    }
}

/// Optimized unary encoding: the true bit is sent as 1 with probability 1/2,
/// every other bit with probability 1 / (e^ε + 1).
#[derive(Debug, Clone)]
pub struct Oue {
    params: ProtocolParams,
    flipper: BitFlipper,
}

impl Oue {
    pub fn new(params: ProtocolParams) -> Self {
        Oue {
            flipper: BitFlipper::new(0.5, params.oue_q()),
            params,
        }
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn perturb<R: Rng + ?Sized>(&self, value: usize, rng: &mut R) -> BitVector {
        self.flipper.perturb(self.params.domain_size(), value, rng)
    }

    /// `f̂(v) = 2((e^ε + 1) C[v] − n) / ((e^ε − 1) n)`
    pub fn estimate(&self, counts: &SupportCounts) -> FrequencyVector {
        let n = counts.reports() as f64;
        let e = self.params.budget().exp();
        counts
            .counts()
            .iter()
            .map(|&c| 2.0 * ((e + 1.0) * c as f64 - n) / ((e - 1.0) * n))
            .collect::<Vec<_>>()
            .into()
    }
}
