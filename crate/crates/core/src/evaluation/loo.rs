//! Pareto-smoothed importance-sampling leave-one-out cross-validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{LogLikMatrix, ModelKind};
use crate::special::log_sum_exp;

/// Share of the draws treated as the tail of the importance ratios.
pub const TAIL_FRACTION: f64 = 0.2;

/// Generalized Pareto fit by the Zhang–Stephens empirical-Bayes method,
/// with the shape shrunk towards 0.5 as `(n k + 5) / (n + 10)`.
/// `x` must be sorted ascending and non-negative. Returns `(k, sigma)`.
pub fn gpd_fit(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    let prior = 3.0;
    let m = 30 + (n as f64).sqrt() as usize;
    let x_star = x[((n as f64 / 4.0 + 0.5).floor() as usize).saturating_sub(1).min(n - 1)];
    let x_max = x[n - 1];
    let theta: Vec<f64> = (1..=m)
        .map(|j| 1.0 / x_max + (1.0 - (m as f64 / (j as f64 - 0.5)).sqrt()) / prior / x_star)
        .collect();
    let profile: Vec<f64> = theta
        .iter()
        .map(|&t| {
            let k = x.iter().map(|v| (-t * v).ln_1p()).sum::<f64>() / n as f64;
            n as f64 * ((-t / k).ln() - k - 1.0)
        })
        .collect();
    let norm = log_sum_exp(&profile);
    let theta_hat: f64 = theta
        .iter()
        .zip(&profile)
        .map(|(t, l)| t * (l - norm).exp())
        .sum();
    let k = x.iter().map(|v| (-theta_hat * v).ln_1p()).sum::<f64>() / n as f64;
    let sigma = -k / theta_hat;
    let nf = n as f64;
    ((nf * k + 5.0) / (nf + 10.0), sigma)
}

fn gpd_quantile(p: f64, k: f64, sigma: f64) -> f64 {
    if k.abs() < 1e-12 {
        -sigma * (-p).ln_1p()
    } else {
        sigma * (-k * (-p).ln_1p()).exp_m1() / k
    }
}

/// Smoothed log weights (max 0) and the tail shape estimate for one unit's
/// log importance ratios. All-equal ratios give `k = -inf`.
pub fn psis_smooth(log_ratios: &[f64]) -> (Vec<f64>, f64) {
    let s = log_ratios.len();
    let max = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut lw: Vec<f64> = log_ratios.iter().map(|r| r - max).collect();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| lw[a].total_cmp(&lw[b]));
    let m = ((TAIL_FRACTION * s as f64).floor() as usize).min(s.saturating_sub(1));
    if m < 5 {
        return (lw, f64::NAN);
    }
    let cutoff = lw[order[s - m - 1]];
    let tail: Vec<usize> = order[s - m..].to_vec();
    let exp_cut = cutoff.exp();
    let x: Vec<f64> = tail.iter().map(|&i| lw[i].exp() - exp_cut).collect();
    if x[m - 1] <= 0.0 || lw[order[0]] == lw[order[s - 1]] {
        return (lw, f64::NEG_INFINITY);
    }
    let (k, sigma) = gpd_fit(&x);
    if !k.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
        return (lw, f64::INFINITY);
    }
    for (j, &i) in tail.iter().enumerate() {
        let p = (j as f64 + 0.5) / m as f64;
        lw[i] = (gpd_quantile(p, k, sigma) + exp_cut).ln().min(0.0);
    }
    (lw, k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LooPoint {
    pub unit_id: String,
    pub elpd_i: f64,
    pub pareto_k: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LooResult {
    pub points: Vec<LooPoint>,
    pub elpd: f64,
}

impl LooResult {
    /// `√n · sd(elpd_i)`.
    pub fn se(&self) -> f64 {
        paired_se(&self.points.iter().map(|p| p.elpd_i).collect::<Vec<_>>())
    }

    pub fn k_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for p in &self.points {
            let k = p.pareto_k;
            let b = if k.is_nan() || k > 0.7 {
                2
            } else if k >= 0.5 {
                1
            } else {
                0
            };
            c[b] += 1;
        }
        c
    }

    pub fn n_bad(&self) -> usize {
        self.k_counts()[2]
    }
}

fn paired_se(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (n * var).sqrt()
}

/// PSIS-LOO from a pointwise log-likelihood matrix (draws × units).
pub fn psis_loo(ll: &LogLikMatrix, unit_ids: &[String]) -> Result<LooResult> {
    if unit_ids.len() != ll.n_units {
        return Err(Error::invalid("unit ids do not match the log-likelihood matrix"));
    }
    if ll.n_draws < 2 {
        return Err(Error::invalid("PSIS needs at least two draws"));
    }
    if ll.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("log-likelihood matrix has non-finite entries"));
    }
    let points: Vec<LooPoint> = (0..ll.n_units)
        .into_par_iter()
        .map(|i| {
            let col = ll.column(i);
            let ratios: Vec<f64> = col.iter().map(|v| -v).collect();
            let (lw, k) = psis_smooth(&ratios);
            let weighted: Vec<f64> = lw.iter().zip(&col).map(|(w, l)| w + l).collect();
            LooPoint {
                unit_id: unit_ids[i].clone(),
                elpd_i: log_sum_exp(&weighted) - log_sum_exp(&lw),
                pareto_k: k,
            }
        })
        .collect();
    let elpd = points.iter().map(|p| p.elpd_i).sum();
    Ok(LooResult { points, elpd })
}

/// Model comparison row: ELPD, its SE and the difference from the best model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LooComparison {
    pub model: ModelKind,
    pub elpd_loo: f64,
    pub se: f64,
    pub elpd_diff: f64,
    pub se_diff: f64,
    pub k_below_05: usize,
    pub k_05_to_07: usize,
    pub k_above_07: usize,
}

pub fn compare(results: &[(ModelKind, LooResult)]) -> Result<Vec<LooComparison>> {
    let Some(best) = results
        .iter()
        .max_by(|a, b| a.1.elpd.total_cmp(&b.1.elpd))
    else {
        return Ok(Vec::new());
    };
    results
        .iter()
        .map(|(kind, r)| {
            if r.points.len() != best.1.points.len() {
                return Err(Error::invalid("LOO results cover different units"));
            }
            let diffs: Vec<f64> = r
                .points
                .iter()
                .zip(&best.1.points)
                .map(|(a, b)| a.elpd_i - b.elpd_i)
                .collect();
            let [good, ok, bad] = r.k_counts();
            Ok(LooComparison {
                model: *kind,
                elpd_loo: r.elpd,
                se: r.se(),
                elpd_diff: r.elpd - best.1.elpd,
                se_diff: paired_se(&diffs),
                k_below_05: good,
                k_05_to_07: ok,
                k_above_07: bad,
            })
        })
        .collect()
}
