//! Power: Bayes posterior mean under a fitted power-law prior.
//!
//! 1. Rank the positive estimates in descending order and fit
//!    `ln f = ln c − β ln rank` by least squares.
//! 2. Estimate the observation noise variance σ² as twice the mean square of
//!    the negative estimates. With no negatives, the mean squared residual
//!    of the fit is used instead.
//! 3. The prior over a true frequency is the image of a uniform rank in
//!    `[1, d]` under the fitted curve, discretized on a grid over `[0, 1]`.
//!    Each estimate is replaced by its posterior mean under Gaussian noise.
//!
//! Fewer than three positive entries cannot support a fit; Norm-Sub is used
//! instead.

use super::norm_sub;
use crate::model::FrequencyVector;

const GRID_POINTS: usize = 1024;
const MIN_POSITIVE: usize = 3;
const MIN_VARIANCE: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    /// Fitted frequency at rank 1.
    pub scale: f64,
    /// Decay exponent β ≥ 0.
    pub exponent: f64,
    /// Observation noise variance σ².
    pub noise_variance: f64,
}

impl PowerFit {
    pub fn fit(f_hat: &[f64]) -> Option<PowerFit> {
        let mut positive: Vec<f64> = f_hat.iter().copied().filter(|&x| x > 0.0).collect();
        if positive.len() < MIN_POSITIVE {
            return None;
        }
        positive.sort_by(|a, b| b.total_cmp(a));

        let m = positive.len() as f64;
        let xs: Vec<f64> = (1..=positive.len()).map(|r| (r as f64).ln()).collect();
        let ys: Vec<f64> = positive.iter().map(|v| v.ln()).collect();
        let x_mean = xs.iter().sum::<f64>() / m;
        let y_mean = ys.iter().sum::<f64>() / m;
        let sxy: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - x_mean) * (y - y_mean))
            .sum();
        let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
        let slope = sxy / sxx;
        let exponent = (-slope).max(0.0);
        let scale = (y_mean + exponent * x_mean).exp();

        let negatives: Vec<f64> = f_hat.iter().copied().filter(|&x| x < 0.0).collect();
        let noise_variance = if negatives.is_empty() {
            positive
                .iter()
                .enumerate()
                .map(|(i, &v)| (v - scale * ((i + 1) as f64).powf(-exponent)).powi(2))
                .sum::<f64>()
                / m
        } else {
            2.0 * negatives.iter().map(|x| x * x).sum::<f64>() / negatives.len() as f64
        };

        Some(PowerFit {
            scale,
            exponent,
            noise_variance: noise_variance.max(MIN_VARIANCE),
        })
    }

    /// Rank at which the fitted curve takes the value `x` (infinite at 0).
    fn rank_at(&self, x: f64) -> f64 {
        if x <= 0.0 {
            f64::INFINITY
        } else {
            (self.scale / x).powf(1.0 / self.exponent)
        }
    }

    /// Prior mass of each grid cell: the share of ranks in `[1, d]` whose
    /// fitted value falls in that cell.
    fn prior(&self, d: usize, grid: &[f64]) -> Vec<f64> {
        let h = 1.0 / (GRID_POINTS - 1) as f64;
        let mut mass = vec![0.0; grid.len()];
        let top = self.scale;
        let bottom = self.scale * (d as f64).powf(-self.exponent);

        if self.exponent < 1e-12 || top - bottom <= 0.0 {
            let j = (top.clamp(0.0, 1.0) / h).round() as usize;
            mass[j.min(grid.len() - 1)] = 1.0;
            return mass;
        }
        let span = d as f64 - 1.0;
        for (j, &x) in grid.iter().enumerate() {
            let lo = (x - h / 2.0).max(0.0);
            let hi = (x + h / 2.0).min(1.0);
            let r_hi = self.rank_at(lo).min(d as f64);
            let r_lo = self.rank_at(hi).max(1.0);
            if r_hi > r_lo {
                mass[j] = (r_hi - r_lo) / span;
            }
        }
        if mass.iter().sum::<f64>() <= 0.0 {
            // The whole curve lies above 1.
            mass[grid.len() - 1] = 1.0;
        }
        mass
    }

    fn posterior_means(&self, f_hat: &[f64]) -> Vec<f64> {
        let grid: Vec<f64> = (0..GRID_POINTS)
            .map(|j| j as f64 / (GRID_POINTS - 1) as f64)
            .collect();
        let support: Vec<(f64, f64)> = self
            .prior(f_hat.len(), &grid)
            .into_iter()
            .zip(&grid)
            .filter(|(m, _)| *m > 0.0)
            .map(|(m, &x)| (m.ln(), x))
            .collect();
        let two_var = 2.0 * self.noise_variance;

        let mut log_w = vec![0.0; support.len()];
        f_hat
            .iter()
            .map(|&obs| {
                let mut peak = f64::NEG_INFINITY;
                for (w, &(log_prior, x)) in log_w.iter_mut().zip(&support) {
                    *w = log_prior - (x - obs).powi(2) / two_var;
                    peak = peak.max(*w);
                }
                let (num, den) =
                    log_w
                        .iter()
                        .zip(&support)
                        .fold((0.0, 0.0), |(n, d), (&w, &(_, x))| {
                            let p = (w - peak).exp();
                            (n + p * x, d + p)
                        });
                num / den
            })
            .collect()
    }
}

pub fn power(f_hat: &[f64]) -> FrequencyVector {
    match PowerFit::fit(f_hat) {
        Some(fit) => fit.posterior_means(f_hat).into(),
        None => norm_sub(f_hat),
    }
}
