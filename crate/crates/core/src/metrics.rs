//! Distances between frequency vectors.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Floor applied to the second argument of [`kl_divergence`] before
/// renormalizing.
pub const KL_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    L1,
    L2,
    Kl,
    Emd,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::L1,
        MetricKind::L2,
        MetricKind::Kl,
        MetricKind::Emd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::L1 => "l1",
            MetricKind::L2 => "l2",
            MetricKind::Kl => "kl",
            MetricKind::Emd => "emd",
        }
    }

    /// Distance from the reference `f` to `other`.
    pub fn evaluate(self, f: &[f64], other: &[f64]) -> Result<f64> {
        match self {
            MetricKind::L1 => l1_distance(f, other),
            MetricKind::L2 => l2_distance(f, other),
            MetricKind::Kl => kl_divergence(f, other),
            MetricKind::Emd => emd(f, other),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownName {
                kind: "metric",
                name: s.to_owned(),
                valid: crate::registry::valid_names(&Self::ALL),
            })
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        })
    }
}

pub fn l1_distance(f: &[f64], other: &[f64]) -> Result<f64> {
    check_dims(f, other)?;
    Ok(f.iter().zip(other).map(|(a, b)| (b - a).abs()).sum())
}

pub fn l2_distance(f: &[f64], other: &[f64]) -> Result<f64> {
    check_dims(f, other)?;
    Ok(f.iter()
        .zip(other)
        .map(|(a, b)| (b - a).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// `KL(f || other)` in nats.
///
/// `other` is floored at [`KL_FLOOR`] and renormalized, so post-processed
/// vectors with zeros (or negatives) where `f > 0` still give a finite value.
/// Terms with `f(v) = 0` contribute nothing.
pub fn kl_divergence(f: &[f64], other: &[f64]) -> Result<f64> {
    check_dims(f, other)?;
    if other.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateDistribution);
    }
    let floored: Vec<f64> = other.iter().map(|&x| x.max(KL_FLOOR)).collect();
    let total: f64 = floored.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateDistribution);
    }
    Ok(f.iter()
        .zip(&floored)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &q)| p * (p / (q / total)).ln())
        .sum::<f64>()
        .max(0.0))
}

/// One-dimensional earth mover's distance with unit spacing between
/// consecutive indices, after normalizing both inputs to unit mass.
pub fn emd(f: &[f64], other: &[f64]) -> Result<f64> {
    check_dims(f, other)?;
    let (sf, so): (f64, f64) = (f.iter().sum(), other.iter().sum());
    if !(sf > 0.0 && so > 0.0) {
        return Err(Error::DegenerateDistribution);
    }
    let mut carried = 0.0;
    let mut work = 0.0;
    for (a, b) in f.iter().zip(other).take(f.len().saturating_sub(1)) {
        carried += a / sf - b / so;
        work += carried.abs();
    }
    Ok(work)
}
