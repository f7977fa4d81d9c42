//! Local hashing protocols. A user's hash function is identified by a
//! uniformly drawn 64-bit seed, so a report is just `(seed, symbol)`.

use rand::Rng;

use super::{ProtocolParams, SupportCounts};
use crate::model::{mix64, FrequencyVector};

const VALUE_SALT: u64 = 0x5851_f42d_4c95_7f2d;

fn value_key(value: usize) -> u64 {
    mix64(value as u64 ^ VALUE_SALT)
}

fn keyed_hash(seed: u64, key: u64, g: u64) -> u64 {
    mix64(seed.wrapping_add(key)) % g
}

/// `H_seed(value)` with range `0..g`.
pub fn hash_to_range(seed: u64, value: usize, g: usize) -> u64 {
    keyed_hash(seed, value_key(value), g as u64)
}

/// Hash-then-randomized-response over range `g`.
#[derive(Debug, Clone)]
struct LocalHashing {
    g: u64,
    keep: f64,
    keys: Vec<u64>,
}

impl LocalHashing {
    fn new(params: &ProtocolParams, g: usize) -> Self {
        LocalHashing {
            g: g as u64,
            keep: params.lh_keep(g),
            keys: (0..params.domain_size()).map(value_key).collect(),
        }
    }

    fn perturb<R: Rng + ?Sized>(&self, value: usize, rng: &mut R) -> (u64, u64) {
        let seed = rng.next_u64();
        let x = keyed_hash(seed, self.keys[value], self.g);
        if rng.random::<f64>() < self.keep {
            return (seed, x);
        }
        let other = rng.random_range(0..self.g - 1);
        (seed, if other >= x { other + 1 } else { other })
    }

    /// Adds one to every candidate whose hash under `seed` equals `symbol`.
    fn support(&self, seed: u64, symbol: u64, counts: &mut [u64]) {
        for (c, &key) in counts.iter_mut().zip(&self.keys) {
            if keyed_hash(seed, key, self.g) == symbol {
                *c += 1;
            }
        }
    }
}

/// Binary local hashing (hash range fixed at 2).
#[derive(Debug, Clone)]
pub struct Blh {
    params: ProtocolParams,
    inner: LocalHashing,
}

impl Blh {
    pub fn new(params: ProtocolParams) -> Self {
        Blh {
            inner: LocalHashing::new(&params, 2),
            params,
        }
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn perturb<R: Rng + ?Sized>(&self, value: usize, rng: &mut R) -> (u64, u64) {
        self.inner.perturb(value, rng)
    }

    pub(crate) fn support(&self, seed: u64, symbol: u64, counts: &mut [u64]) {
        self.inner.support(seed, symbol, counts)
    }

    /// `f̂(v) = (e^ε + 1)(2 Sup(v) − n) / ((e^ε − 1) n)`
    pub fn estimate(&self, counts: &SupportCounts) -> FrequencyVector {
        let n = counts.reports() as f64;
        let e = self.params.budget().exp();
        counts
            .counts()
            .iter()
            .map(|&s| (e + 1.0) * (2.0 * s as f64 - n) / ((e - 1.0) * n))
            .collect::<Vec<_>>()
            .into()
    }
}

/// Optimized local hashing with range `g` taken from the parameters.
#[derive(Debug, Clone)]
pub struct Olh {
    params: ProtocolParams,
    inner: LocalHashing,
}

impl Olh {
    pub fn new(params: ProtocolParams) -> Self {
        Olh {
            inner: LocalHashing::new(&params, params.hash_range()),
            params,
        }
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn perturb<R: Rng + ?Sized>(&self, value: usize, rng: &mut R) -> (u64, u64) {
        self.inner.perturb(value, rng)
    }

    pub(crate) fn support(&self, seed: u64, symbol: u64, counts: &mut [u64]) {
        self.inner.support(seed, symbol, counts)
    }

    /// `f̂(v) = (e^ε + g − 1)(g Sup(v) − n) / ((e^ε − 1)(g − 1) n)`
    pub fn estimate(&self, counts: &SupportCounts) -> FrequencyVector {
        let n = counts.reports() as f64;
        let e = self.params.budget().exp();
        let g = self.params.hash_range() as f64;
        counts
            .counts()
            .iter()
            .map(|&s| (e + g - 1.0) * (g * s as f64 - n) / ((e - 1.0) * (g - 1.0) * n))
            .collect::<Vec<_>>()
            .into()
    }
}
