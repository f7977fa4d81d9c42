//! LDP frequency oracles.
//!
//! Every protocol is split into a client half ([`Protocol::perturb`]) and a
//! server half ([`Protocol::accumulate`] + [`Protocol::estimate`]). Estimates
//! are affine in the per-value support counts, which is what makes the
//! size-weighted combine in the engine exact.

mod bits;
mod grr;
mod hashing;
mod subset;
mod unary;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

pub use bits::BitVector;
pub use grr::Grr;
pub use hashing::{hash_to_range, Blh, Olh};
pub use subset::SubsetSelection;
pub use unary::{Oue, Rappor};

use crate::error::{Error, Result};
use crate::model::{Dataset, FrequencyVector, PrivacyBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolKind {
    Grr,
    Rappor,
    Oue,
    Blh,
    Olh,
    Ss,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 6] = [
        ProtocolKind::Grr,
        ProtocolKind::Rappor,
        ProtocolKind::Oue,
        ProtocolKind::Blh,
        ProtocolKind::Olh,
        ProtocolKind::Ss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Grr => "GRR",
            ProtocolKind::Rappor => "RAPPOR",
            ProtocolKind::Oue => "OUE",
            ProtocolKind::Blh => "BLH",
            ProtocolKind::Olh => "OLH",
            ProtocolKind::Ss => "SS",
        }
    }

    /// Parses a comma separated list, where `all` expands to every protocol.
    pub fn parse_list(spec: &str) -> Result<Vec<ProtocolKind>> {
        crate::registry::parse_list(spec, &Self::ALL)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownName {
                kind: "protocol",
                name: s.to_owned(),
                valid: crate::registry::valid_names(&Self::ALL),
            })
    }
}

/// Global protocol parameters shared by every thread of a run.
///
/// `g` is only used by OLH and `k` only by SS; both always hold a valid value
/// so the struct can be handed to any protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    budget: PrivacyBudget,
    d: usize,
    g: usize,
    k: usize,
}

impl ProtocolParams {
    pub fn new(budget: PrivacyBudget, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DomainTooSmall(d));
        }
        Ok(ProtocolParams {
            budget,
            d,
            g: default_hash_range(budget),
            k: default_subset_size(budget, d),
        })
    }

    pub fn with_hash_range(mut self, g: usize) -> Result<Self> {
        if g < 2 {
            return Err(Error::InvalidParameter(format!(
                "hash range g must be >= 2, got {g}"
            )));
        }
        self.g = g;
        Ok(self)
    }

    pub fn with_subset_size(mut self, k: usize) -> Result<Self> {
        if k < 1 || k >= self.d {
            return Err(Error::InvalidParameter(format!(
                "subset size k must be in 1..={}, got {k}",
                self.d - 1
            )));
        }
        self.k = k;
        Ok(self)
    }

    pub fn budget(&self) -> PrivacyBudget {
        self.budget
    }

    pub fn epsilon(&self) -> f64 {
        self.budget.epsilon()
    }

    pub fn domain_size(&self) -> usize {
        self.d
    }

    pub fn hash_range(&self) -> usize {
        self.g
    }

    pub fn subset_size(&self) -> usize {
        self.k
    }

    /// GRR probability of reporting the true value.
    pub fn grr_p(&self) -> f64 {
        let e = self.budget.exp();
        e / (e + self.d as f64 - 1.0)
    }

    /// GRR probability of reporting one particular other value.
    pub fn grr_q(&self) -> f64 {
        1.0 / (self.budget.exp() + self.d as f64 - 1.0)
    }

    /// RAPPOR bit-keeping probability α.
    pub fn rappor_alpha(&self) -> f64 {
        let h = (self.epsilon() / 2.0).exp();
        h / (h + 1.0)
    }

    /// OUE probability that a zero bit is reported as one.
    pub fn oue_q(&self) -> f64 {
        1.0 / (self.budget.exp() + 1.0)
    }

    /// Local hashing probability of keeping the hashed symbol, for range `g`.
    pub fn lh_keep(&self, g: usize) -> f64 {
        let e = self.budget.exp();
        e / (e + g as f64 - 1.0)
    }

    /// SS probability σ_k that the true value is in the reported subset.
    pub fn ss_sigma(&self) -> f64 {
        let (e, d, k) = (self.budget.exp(), self.d as f64, self.k as f64);
        k * e / (k * e + d - k)
    }

    /// SS probability θ_k that a given non-true value is in the reported subset.
    pub fn ss_theta(&self) -> f64 {
        let (e, d, k) = (self.budget.exp(), self.d as f64, self.k as f64);
        ((k - 1.0) * k * e + (d - k) * k) / ((d - 1.0) * (k * e + d - k))
    }
}

/// `g = max(2, round(e^ε + 1))`
pub fn default_hash_range(budget: PrivacyBudget) -> usize {
    let g = (budget.exp() + 1.0).round();
    if g.is_finite() && g < usize::MAX as f64 {
        (g as usize).max(2)
    } else {
        usize::MAX
    }
}

/// `k = clamp(round(d / (e^ε + 1)), 1, d - 1)`
pub fn default_subset_size(budget: PrivacyBudget, d: usize) -> usize {
    let k = (d as f64 / (budget.exp() + 1.0)).round() as usize;
    k.clamp(1, d - 1)
}

/// What a single user sends to the aggregator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Report {
    /// GRR
    Categorical(usize),
    /// RAPPOR, OUE
    Bits(BitVector),
    /// BLH, OLH: the hash function is identified by its seed.
    Hashed { seed: u64, symbol: u64 },
    /// SS, sorted ascending.
    Subset(Vec<usize>),
}

/// Per-value support counts over `n` aggregated reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportCounts {
    counts: Vec<u64>,
    n: u64,
}

impl SupportCounts {
    pub fn new(d: usize) -> Self {
        SupportCounts {
            counts: vec![0; d],
            n: 0,
        }
    }

    pub fn from_parts(counts: Vec<u64>, n: u64) -> Result<Self> {
        if let Some(&c) = counts.iter().find(|&&c| c > n) {
            return Err(Error::InvalidParameter(format!(
                "support count {c} exceeds n = {n}"
            )));
        }
        Ok(SupportCounts { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn reports(&self) -> u64 {
        self.n
    }

    pub fn merge(&mut self, other: &SupportCounts) -> Result<()> {
        if other.counts.len() != self.counts.len() {
            return Err(Error::Dimension {
                expected: self.counts.len(),
                actual: other.counts.len(),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n += other.n;
        Ok(())
    }
}

/// Applies `f̂(v) = (C(v)/n − q) / (p − q)` for every value.
///
/// Every protocol's estimator can be written this way with its own `p`
/// (support rate of the true value) and `q` (support rate of any other value).
fn debias(counts: &SupportCounts, p: f64, q: f64) -> FrequencyVector {
    let n = counts.n as f64;
    counts
        .counts
        .iter()
        .map(|&c| (c as f64 - n * q) / ((p - q) * n))
        .collect::<Vec<_>>()
        .into()
}

/// A configured frequency oracle.
#[derive(Debug, Clone)]
pub enum Protocol {
    Grr(Grr),
    Rappor(Rappor),
    Oue(Oue),
    Blh(Blh),
    Olh(Olh),
    Ss(SubsetSelection),
}

impl Protocol {
    pub fn new(kind: ProtocolKind, params: ProtocolParams) -> Self {
        match kind {
            ProtocolKind::Grr => Protocol::Grr(Grr::new(params)),
            ProtocolKind::Rappor => Protocol::Rappor(Rappor::new(params)),
            ProtocolKind::Oue => Protocol::Oue(Oue::new(params)),
            ProtocolKind::Blh => Protocol::Blh(Blh::new(params)),
            ProtocolKind::Olh => Protocol::Olh(Olh::new(params)),
            ProtocolKind::Ss => Protocol::Ss(SubsetSelection::new(params)),
        }
    }

    pub fn kind(&self) -> ProtocolKind {
        match self {
            Protocol::Grr(_) => ProtocolKind::Grr,
            Protocol::Rappor(_) => ProtocolKind::Rappor,
            Protocol::Oue(_) => ProtocolKind::Oue,
            Protocol::Blh(_) => ProtocolKind::Blh,
            Protocol::Olh(_) => ProtocolKind::Olh,
            Protocol::Ss(_) => ProtocolKind::Ss,
        }
    }

    pub fn params(&self) -> &ProtocolParams {
        match self {
            Protocol::Grr(p) => p.params(),
            Protocol::Rappor(p) => p.params(),
            Protocol::Oue(p) => p.params(),
            Protocol::Blh(p) => p.params(),
            Protocol::Olh(p) => p.params(),
            Protocol::Ss(p) => p.params(),
        }
    }

    pub fn perturb<R: Rng + ?Sized>(&self, value: usize, rng: &mut R) -> Report {
        debug_assert!(value < self.params().domain_size());
        match self {
            Protocol::Grr(p) => Report::Categorical(p.perturb(value, rng)),
            Protocol::Rappor(p) => Report::Bits(p.perturb(value, rng)),
            Protocol::Oue(p) => Report::Bits(p.perturb(value, rng)),
            Protocol::Blh(p) => {
                let (seed, symbol) = p.perturb(value, rng);
                Report::Hashed { seed, symbol }
            }
            Protocol::Olh(p) => {
                let (seed, symbol) = p.perturb(value, rng);
                Report::Hashed { seed, symbol }
            }
            Protocol::Ss(p) => Report::Subset(p.perturb(value, rng)),
        }
    }

    /// Adds one report's support to `counts`.
    pub fn accumulate(&self, report: &Report, counts: &mut SupportCounts) -> Result<()> {
        let d = self.params().domain_size();
        if counts.counts.len() != d {
            return Err(Error::Dimension {
                expected: d,
                actual: counts.counts.len(),
            });
        }
        match (self, report) {
            (Protocol::Grr(_), Report::Categorical(y)) if *y < d => counts.counts[*y] += 1,
            (Protocol::Rappor(_) | Protocol::Oue(_), Report::Bits(bits)) if bits.len() == d => {
                for i in bits.ones() {
                    counts.counts[i] += 1;
                }
            }
            (Protocol::Blh(p), Report::Hashed { seed, symbol }) if *symbol < 2 => {
                p.support(*seed, *symbol, &mut counts.counts)
            }
            (Protocol::Olh(p), Report::Hashed { seed, symbol })
                if *symbol < p.params().hash_range() as u64 =>
            {
                p.support(*seed, *symbol, &mut counts.counts)
            }
            (Protocol::Ss(p), Report::Subset(members))
                if members.len() == p.params().subset_size() && members.iter().all(|&m| m < d) =>
            {
                for &m in members {
                    counts.counts[m] += 1;
                }
            }
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "report {report:?} is not a valid {} report for d = {d}",
                    self.kind()
                )))
            }
        }
        counts.n += 1;
        Ok(())
    }

    pub fn aggregate<'a, I>(&self, reports: I) -> Result<SupportCounts>
    where
        I: IntoIterator<Item = &'a Report>,
    {
        let mut counts = SupportCounts::new(self.params().domain_size());
        for r in reports {
            self.accumulate(r, &mut counts)?;
        }
        Ok(counts)
    }

    pub fn estimate(&self, counts: &SupportCounts) -> Result<FrequencyVector> {
        let d = self.params().domain_size();
        if counts.counts.len() != d {
            return Err(Error::Dimension {
                expected: d,
                actual: counts.counts.len(),
            });
        }
        if counts.n == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(match self {
            Protocol::Grr(p) => p.estimate(counts),
            Protocol::Rappor(p) => p.estimate(counts),
            Protocol::Oue(p) => p.estimate(counts),
            Protocol::Blh(p) => p.estimate(counts),
            Protocol::Olh(p) => p.estimate(counts),
            Protocol::Ss(p) => p.estimate(counts),
        })
    }

    /// Perturbs, aggregates and estimates a slice of user values.
    pub fn run<R: Rng + ?Sized>(&self, values: &[usize], rng: &mut R) -> Result<FrequencyVector> {
        let d = self.params().domain_size();
        let mut counts = SupportCounts::new(d);
        for &v in values {
            if v >= d {
                return Err(Error::ValueOutOfDomain { index: v, size: d });
            }
            let report = self.perturb(v, rng);
            self.accumulate(&report, &mut counts)?;
        }
        self.estimate(&counts)
    }
}

/// Composition of perturbation, aggregation and estimation over a whole dataset.
pub fn run_protocol<R: Rng + ?Sized>(
    kind: ProtocolKind,
    dataset: &Dataset,
    params: ProtocolParams,
    rng: &mut R,
) -> Result<FrequencyVector> {
    Protocol::new(kind, params).run(dataset.values(), rng)
}
