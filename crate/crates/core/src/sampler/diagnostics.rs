//! Split-R̂ and effective sample size.

use serde::{Deserialize, Serialize};

use super::PosteriorDraws;
use crate::special::{mean, quantile_sorted};

fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Halves of every chain, truncated to a common length. Odd-length chains
/// drop their middle draw.
fn split_chains(chains: &[Vec<f64>]) -> Vec<&[f64]> {
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    let half = n / 2;
    chains
        .iter()
        .flat_map(|c| {
            let c = &c[..n];
            [&c[..half], &c[n - half..]]
        })
        .collect()
}

fn check_shape(chains: &[Vec<f64>]) -> bool {
    chains.len() >= 2 && chains.iter().all(|c| c.len() >= 4)
}

/// Classic split-R̂ (no rank normalization).
///
/// With zero within-half variance everywhere the result is 1.0 when all halves
/// share one value and +inf otherwise. Returns NaN for fewer than 2 chains or
/// fewer than 4 draws per chain.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    if !check_shape(chains) {
        return f64::NAN;
    }
    let halves = split_chains(chains);
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let w = mean(&halves.iter().map(|h| sample_var(h)).collect::<Vec<_>>());
    let b_over_n = sample_var(&means);
    if w <= 0.0 {
        return if b_over_n <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * w + b_over_n;
    (var_plus / w).sqrt()
}

/// Lag-`t` autocovariance with the 1/n normalization.
fn autocov(x: &[f64], m: f64, t: usize) -> f64 {
    let n = x.len();
    x[..n - t]
        .iter()
        .zip(&x[t..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / n as f64
}

/// Effective sample size over split chains, with Geyer's initial monotone
/// sequence on the combined autocorrelation. Constant draws give the total
/// draw count.
pub fn ess(chains: &[Vec<f64>]) -> f64 {
    if !check_shape(chains) {
        return f64::NAN;
    }
    let halves = split_chains(chains);
    let m = halves.len();
    let n = halves[0].len();
    let total = (m * n) as f64;
    if halves.iter().flat_map(|h| h.iter()).any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    let first = halves[0][0];
    if halves.iter().all(|h| h.iter().all(|&v| v == first)) {
        return total;
    }

    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let acov_at = |t: usize| -> f64 {
        halves
            .iter()
            .zip(&means)
            .map(|(h, &mu)| autocov(h, mu, t))
            .sum::<f64>()
            / m as f64
    };
    let nf = n as f64;
    let mean_var = acov_at(0) * nf / (nf - 1.0);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        var_plus += sample_var(&means);
    }
    if !(var_plus > 0.0) {
        return total;
    }

    let mut rho = vec![0.0; n];
    rho[0] = 1.0;
    let mut rho_even = 1.0;
    let mut rho_odd = 1.0 - (mean_var - acov_at(1)) / var_plus;
    rho[1] = rho_odd;
    let mut t = 1;
    while t + 4 < n && rho_even + rho_odd > 0.0 {
        rho_even = 1.0 - (mean_var - acov_at(t + 1)) / var_plus;
        rho_odd = 1.0 - (mean_var - acov_at(t + 2)) / var_plus;
        if rho_even + rho_odd >= 0.0 {
            rho[t + 1] = rho_even;
            rho[t + 2] = rho_odd;
        }
        t += 2;
    }
    let max_t = t;
    if rho_even > 0.0 && max_t + 1 < n {
        rho[max_t + 1] = rho_even;
    }
    let mut t = 1;
    while t + 3 <= max_t {
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t] {
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0;
            rho[t + 2] = rho[t + 1];
        }
        t += 2;
    }
    let tail = if max_t + 1 < n { rho[max_t + 1] } else { 0.0 };
    let tau = (-1.0 + 2.0 * rho[..max_t].iter().sum::<f64>() + tail).max(1.0 / total.log10());
    total / tau
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q5: f64,
    pub q50: f64,
    pub q95: f64,
    pub rhat: f64,
    pub ess: f64,
}

pub fn summarize(draws: &PosteriorDraws) -> Vec<ParameterSummary> {
    (0..draws.n_params())
        .map(|j| {
            let chains = draws.chains_of(j);
            let mut pooled = draws.pooled(j);
            let mu = mean(&pooled);
            let sd = if pooled.len() > 1 { sample_var(&pooled).sqrt() } else { 0.0 };
            pooled.sort_by(f64::total_cmp);
            ParameterSummary {
                name: draws.names[j].clone(),
                mean: mu,
                sd,
                q5: quantile_sorted(&pooled, 0.05),
                q50: quantile_sorted(&pooled, 0.5),
                q95: quantile_sorted(&pooled, 0.95),
                rhat: split_rhat(&chains),
                ess: ess(&chains),
            }
        })
        .collect()
}
