//! Post-processing of raw LDP estimates.
//!
//! Raw estimates can be negative and need not sum to one. Each method here
//! maps an estimate `f̂` to `f̃` enforcing some or all of those constraints.
//! All methods are pure and operate on the combined estimate only.

mod power;

use std::fmt;
use std::str::FromStr;

pub use power::{power, PowerFit};

use crate::error::{Error, Result};
use crate::model::FrequencyVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PostProcessKind {
    /// Identity; the "w/o PP" baseline.
    None,
    BasePos,
    Norm,
    NormCut,
    NormSub,
    NormMul,
    Power,
    PowerNs,
}

impl PostProcessKind {
    pub const ALL: [PostProcessKind; 8] = [
        PostProcessKind::None,
        PostProcessKind::BasePos,
        PostProcessKind::Norm,
        PostProcessKind::NormCut,
        PostProcessKind::NormSub,
        PostProcessKind::NormMul,
        PostProcessKind::Power,
        PostProcessKind::PowerNs,
    ];

    /// The seven real methods, without the identity.
    pub const METHODS: [PostProcessKind; 7] = [
        PostProcessKind::BasePos,
        PostProcessKind::Norm,
        PostProcessKind::NormCut,
        PostProcessKind::NormSub,
        PostProcessKind::NormMul,
        PostProcessKind::Power,
        PostProcessKind::PowerNs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PostProcessKind::None => "none",
            PostProcessKind::BasePos => "base_pos",
            PostProcessKind::Norm => "norm",
            PostProcessKind::NormCut => "norm_cut",
            PostProcessKind::NormSub => "norm_sub",
            PostProcessKind::NormMul => "norm_mul",
            PostProcessKind::Power => "power",
            PostProcessKind::PowerNs => "power_ns",
        }
    }

    /// Comma separated list; `all` expands to the seven methods.
    pub fn parse_list(spec: &str) -> Result<Vec<PostProcessKind>> {
        crate::registry::parse_list(spec, &Self::METHODS)
    }

    pub fn apply(self, f_hat: &[f64]) -> FrequencyVector {
        match self {
            PostProcessKind::None => f_hat.to_vec().into(),
            PostProcessKind::BasePos => base_pos(f_hat),
            PostProcessKind::Norm => norm(f_hat),
            PostProcessKind::NormCut => norm_cut(f_hat),
            PostProcessKind::NormSub => norm_sub(f_hat),
            PostProcessKind::NormMul => norm_mul(f_hat),
            PostProcessKind::Power => power(f_hat),
            PostProcessKind::PowerNs => power_ns(f_hat),
        }
    }
}

impl fmt::Display for PostProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PostProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownName {
                kind: "post-processing method",
                name: s.to_owned(),
                valid: crate::registry::valid_names(&Self::ALL),
            })
    }
}

/// Clamps negative estimates to zero.
pub fn base_pos(f_hat: &[f64]) -> FrequencyVector {
    f_hat.iter().map(|&x| x.max(0.0)).collect::<Vec<_>>().into()
}

/// Adds the same constant to every entry so the total is one. Can leave
/// negative entries.
pub fn norm(f_hat: &[f64]) -> FrequencyVector {
    let shift = (1.0 - f_hat.iter().sum::<f64>()) / f_hat.len() as f64;
    f_hat.iter().map(|&x| x + shift).collect::<Vec<_>>().into()
}

/// Zeroes negative and small positive entries.
///
/// When the positive mass exceeds one, only the longest run of the largest
/// entries whose cumulative sum stays at or below one survives; kept entries
/// are not rescaled.
pub fn norm_cut(f_hat: &[f64]) -> FrequencyVector {
    let positive_mass: f64 = f_hat.iter().filter(|&&x| x > 0.0).sum();
    if positive_mass <= 1.0 {
        return base_pos(f_hat);
    }
    let mut order: Vec<usize> = (0..f_hat.len()).filter(|&i| f_hat[i] > 0.0).collect();
    // Stable sort keeps lower indices first among equal values.
    order.sort_by(|&a, &b| f_hat[b].total_cmp(&f_hat[a]));

    let mut out = vec![0.0; f_hat.len()];
    let mut cumulative = 0.0;
    for i in order {
        cumulative += f_hat[i];
        if cumulative > 1.0 {
            break;
        }
        out[i] = f_hat[i];
    }
    out.into()
}

/// Total of `max(0, x + delta)` over the vector.
fn shifted_positive_mass(f_hat: &[f64], delta: f64) -> f64 {
    f_hat.iter().map(|&x| (x + delta).max(0.0)).sum()
}

/// Finds δ with `Σ max(0, f̂(v) + δ) = 1` by bisection.
pub fn norm_sub_shift(f_hat: &[f64]) -> f64 {
    let max = f_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = f_hat.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (-1.0 - max, 1.0 + min.abs());
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if shifted_positive_mass(f_hat, mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta = 0.5 * (lo + hi);

    // The bracket pins down which entries survive; solve exactly on that set.
    let (count, sum) = f_hat
        .iter()
        .filter(|&&x| x + delta > 0.0)
        .fold((0usize, 0.0), |(c, s), &x| (c + 1, s + x));
    if count == 0 {
        return delta;
    }
    let exact = (1.0 - sum) / count as f64;
    let same_support = f_hat
        .iter()
        .all(|&x| (x + delta > 0.0) == (x + exact > 0.0));
    if same_support {
        exact
    } else {
        delta
    }
}

/// Adds a common δ and clamps at zero so that the result sums to one.
pub fn norm_sub(f_hat: &[f64]) -> FrequencyVector {
    let delta = norm_sub_shift(f_hat);
    f_hat
        .iter()
        .map(|&x| (x + delta).max(0.0))
        .collect::<Vec<_>>()
        .into()
}

/// Zeroes negatives and rescales the positive entries to sum to one.
/// Falls back to uniform when nothing is positive.
pub fn norm_mul(f_hat: &[f64]) -> FrequencyVector {
    let positive_mass: f64 = f_hat.iter().filter(|&&x| x > 0.0).sum();
    if positive_mass <= 0.0 {
        return FrequencyVector::uniform(f_hat.len());
    }
    let alpha = 1.0 / positive_mass;
    f_hat
        .iter()
        .map(|&x| if x > 0.0 { alpha * x } else { 0.0 })
        .collect::<Vec<_>>()
        .into()
}

/// Power followed by Norm-Sub.
pub fn power_ns(f_hat: &[f64]) -> FrequencyVector {
    norm_sub(&power(f_hat))
}
