//! Shared domain types and the deterministic random-number contract.
//!
//! Everything here is immutable once built. [`RandomSource`] is the only
//! stateful type and is owned by exactly one (repetition, thread) pair.

use std::collections::{BTreeSet, HashMap};
use std::ops::Deref;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x1d9_2024;

/// Ordered mapping between raw value labels and indices `0..d`.
///
/// Labels are kept in lexicographic order so that index assignment (and
/// therefore anything sensitive to index distance, like EMD) does not depend
/// on input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Domain {
    pub fn build<I, S>(raw_labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let distinct: BTreeSet<String> = raw_labels
            .into_iter()
            .map(|s| s.as_ref().to_owned())
            .collect();
        if distinct.len() < 2 {
            return Err(Error::DomainTooSmall(distinct.len()));
        }
        let labels: Vec<String> = distinct.into_iter().collect();
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Ok(Domain { labels, index })
    }

    /// Domain of `d` synthetic labels whose lexicographic order matches
    /// their index (`v0`..`v9`, or `v00`..`v99`, ...).
    pub fn indexed(d: usize) -> Result<Self> {
        let width = d.saturating_sub(1).to_string().len();
        Self::build((0..d).map(|i| format!("v{i:0width$}")))
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }
}

/// Privacy parameter ε of an ε-LDP mechanism.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PrivacyBudget(f64);

impl PrivacyBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon.is_finite() && epsilon > 0.0 {
            Ok(PrivacyBudget(epsilon))
        } else {
            Err(Error::InvalidEpsilon(epsilon))
        }
    }

    pub fn epsilon(self) -> f64 {
        self.0
    }

    /// `e^ε`
    pub fn exp(self) -> f64 {
        self.0.exp()
    }
}

/// Length-d vector of (true, estimated or post-processed) frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVector(Vec<f64>);

impl FrequencyVector {
    pub fn new(values: Vec<f64>) -> Self {
        FrequencyVector(values)
    }

    pub fn uniform(d: usize) -> Self {
        FrequencyVector(vec![1.0 / d as f64; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Nonnegative entries summing to 1 within `tol`.
    pub fn is_distribution(&self, tol: f64) -> bool {
        self.0.iter().all(|&x| x >= 0.0) && (self.total() - 1.0).abs() <= tol
    }
}

impl Deref for FrequencyVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for FrequencyVector {
    fn from(values: Vec<f64>) -> Self {
        FrequencyVector(values)
    }
}

/// One domain index per user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    values: Vec<usize>,
}

impl Dataset {
    pub fn new(values: Vec<usize>, domain_size: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(&index) = values.iter().find(|&&v| v >= domain_size) {
            return Err(Error::ValueOutOfDomain {
                index,
                size: domain_size,
            });
        }
        Ok(Dataset { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }
}

/// Empirical frequency of every domain value.
pub fn true_frequencies(dataset: &Dataset, domain: &Domain) -> FrequencyVector {
    let mut counts = vec![0u64; domain.size()];
    for &v in dataset.values() {
        counts[v] += 1;
    }
    let n = dataset.len() as f64;
    FrequencyVector(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Deterministic per-(repetition, thread) pseudo-random generator.
#[derive(Debug, Clone)]
pub struct RandomSource(ChaCha8Rng);

impl RandomSource {
    pub fn from_seed(seed: u64) -> Self {
        RandomSource(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the stream owned by `(repetition, thread_index)` under `master_seed`.
///
/// Each input is folded in through its own avalanche round so that nearby
/// triples such as `(s, 1, 0)` and `(s + 1, 0, 0)` land far apart.
pub fn stream_seed(master_seed: u64, repetition: u64, thread_index: u64) -> u64 {
    const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
    let h = mix64(master_seed.wrapping_add(GAMMA));
    let h = mix64(
        h ^ repetition
            .wrapping_mul(0xd1b5_4a32_d192_ed03)
            .wrapping_add(GAMMA),
    );
    mix64(
        h ^ thread_index
            .wrapping_mul(0x8cb9_2ba7_2f3d_8dd7)
            .wrapping_add(GAMMA),
    )
}

pub fn derive_rng(master_seed: u64, repetition: u64, thread_index: u64) -> RandomSource {
    RandomSource::from_seed(stream_seed(master_seed, repetition, thread_index))
}
