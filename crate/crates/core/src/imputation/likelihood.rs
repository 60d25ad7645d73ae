use crate::special::{ln_gamma, log_sum_exp};

/// Log pmf of a Poisson count.
pub fn poisson_ln_pmf(k: u32, lambda: f64) -> f64 {
    if k == 0 {
        return -lambda;
    }
    k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)
}

/// `ln P(X < k)` for `X ~ Poisson(lambda)`, summed in log space.
pub fn ln_poisson_cdf_below(k: u32, lambda: f64) -> f64 {
    if k == 0 {
        return f64::NEG_INFINITY;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    let terms: Vec<f64> = (0..k).map(|j| poisson_ln_pmf(j, lambda)).collect();
    log_sum_exp(&terms)
}

/// `d/dλ ln P(X < k) = -pmf(k - 1) / P(X < k)`.
pub fn d_ln_poisson_cdf_below(k: u32, lambda: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let ln_f = ln_poisson_cdf_below(k, lambda);
    -(poisson_ln_pmf(k - 1, lambda) - ln_f).exp()
}

/// Sufficient statistics of one count history.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HistoryStats {
    pub n_observed: u32,
    pub sum_observed: f64,
    /// Sum of `ln(u!)` over observed entries.
    pub sum_ln_factorial: f64,
    pub n_censored: u32,
}

impl HistoryStats {
    pub fn n_entries(&self) -> u32 {
        self.n_observed + self.n_censored
    }

    pub fn all_censored(&self) -> bool {
        self.n_observed == 0
    }

    /// Log-likelihood and its derivative in λ.
    pub fn loglik_grad(&self, lambda: f64, threshold: u32) -> (f64, f64) {
        if !(lambda > 0.0) {
            return (f64::NEG_INFINITY, 0.0);
        }
        let mut ll = self.sum_observed * lambda.ln()
            - self.n_observed as f64 * lambda
            - self.sum_ln_factorial;
        let mut d = self.sum_observed / lambda - self.n_observed as f64;
        if self.n_censored > 0 {
            let c = self.n_censored as f64;
            ll += c * ln_poisson_cdf_below(threshold, lambda);
            d += c * d_ln_poisson_cdf_below(threshold, lambda);
        }
        (ll, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lambda_censoring_is_certain() {
        assert!(ln_poisson_cdf_below(10, 1e-12).abs() < 1e-11);
        assert_eq!(ln_poisson_cdf_below(10, 0.0), 0.0);
    }

    #[test]
    fn derivative_matches_difference() {
        for &lam in &[0.3, 5.0, 12.0, 40.0] {
            let h = 1e-6 * lam;
            let num = (ln_poisson_cdf_below(10, lam + h) - ln_poisson_cdf_below(10, lam - h)) / (2.0 * h);
            let ana = d_ln_poisson_cdf_below(10, lam);
            assert!((num - ana).abs() < 1e-6 * ana.abs().max(1.0), "{lam}: {num} vs {ana}");
        }
    }

    #[test]
    fn non_positive_rate_is_impossible() {
        let s = HistoryStats {
            n_censored: 1,
            ..Default::default()
        };
        assert_eq!(s.loglik_grad(0.0, 10).0, f64::NEG_INFINITY);
        assert_eq!(s.loglik_grad(-1.0, 10).0, f64::NEG_INFINITY);
    }
}
