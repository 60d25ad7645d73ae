//! Slow, direct reference implementations kept apart from the production
//! code paths so tests can compare the two.

use statrs::function::gamma::ln_gamma;

/// `P(X <= k)` for `X ~ Poisson(λ)` by summing the pmf term by term.
pub fn poisson_cdf(k: u32, lambda: f64) -> f64 {
    let mut total = 0.0;
    for j in 0..=k {
        let mut term = (-lambda).exp();
        for i in 1..=j {
            term *= lambda / i as f64;
        }
        total += term;
    }
    total
}

/// Beta-binomial pmf written out with log-Gamma terms.
pub fn beta_binomial_pmf(k: u64, n: u64, alpha: f64, beta: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let (k, n) = (k as f64, n as f64);
    (ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0) + ln_gamma(k + alpha) + ln_gamma(n - k + beta)
        - ln_gamma(n + alpha + beta)
        + ln_gamma(alpha + beta)
        - ln_gamma(alpha)
        - ln_gamma(beta))
    .exp()
}

/// Binomial pmf from the product form of the coefficient.
pub fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut c = 1.0;
    for i in 0..k.min(n - k) {
        c *= (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// `mean|X - y| - 0.5 · mean|X - X'|` over all ordered pairs.
pub fn crps_pairs(samples: &[f64], y: f64) -> f64 {
    let m = samples.len() as f64;
    let first: f64 = samples.iter().map(|x| (x - y).abs()).sum::<f64>() / m;
    let mut pair = 0.0;
    for a in samples {
        for b in samples {
            pair += (a - b).abs();
        }
    }
    first - 0.5 * pair / (m * m)
}

/// CRPS of the empirical distribution of `samples` by integrating
/// `(F(x) - 1{x >= y})²` piecewise between the sorted breakpoints.
pub fn crps_integral(samples: &[f64], y: f64) -> f64 {
    let mut pts: Vec<f64> = samples.to_vec();
    pts.push(y);
    pts.sort_by(f64::total_cmp);
    let m = samples.len() as f64;
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let f = samples.iter().filter(|&&s| s <= mid).count() as f64 / m;
        let h = if mid >= y { 1.0 } else { 0.0 };
        total += (f - h).powi(2) * (hi - lo);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures() {
        assert!((poisson_cdf(9, 5.0) - 0.968_171_942_694_2).abs() < 1e-12);
        for k in 0..=2 {
            assert!((beta_binomial_pmf(k, 2, 1.0, 1.0) - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(crps_pairs(&[0.0, 2.0], 1.0), 0.5);
        assert!((crps_integral(&[0.0, 2.0], 1.0) - 0.5).abs() < 1e-12);
        assert!((binomial_pmf(2, 4, 0.5) - 0.375).abs() < 1e-15);
    }
}
