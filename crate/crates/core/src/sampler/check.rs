//! Finite-difference gradient checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LogDensity;

#[derive(Clone, Debug, PartialEq)]
pub struct GradientReport {
    pub points: usize,
    /// Largest `|analytic - numeric| / max(1, |analytic|, |numeric|)`.
    pub max_rel_err: f64,
    /// Point and coordinate where the largest error occurred.
    pub worst: (usize, usize),
}

impl GradientReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_err < tol
    }
}

/// Compares analytic gradients to central differences at `points` random
/// locations drawn uniformly from `[-radius, radius]^dim`.
pub fn check_gradient<T: LogDensity + ?Sized>(
    target: &T,
    points: usize,
    radius: f64,
    seed: u64,
) -> GradientReport {
    let dim = target.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grad = vec![0.0; dim];
    let mut report = GradientReport {
        points,
        max_rel_err: 0.0,
        worst: (0, 0),
    };
    for k in 0..points {
        let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-radius..radius)).collect();
        target.log_density_grad(&q, &mut grad);
        let mut x = q.clone();
        for i in 0..dim {
            let h = 1e-5 * q[i].abs().max(1.0);
            x[i] = q[i] + h;
            let up = target.log_density(&x);
            x[i] = q[i] - h;
            let down = target.log_density(&x);
            x[i] = q[i];
            let numeric = (up - down) / (2.0 * h);
            let err = (grad[i] - numeric).abs() / 1f64.max(grad[i].abs()).max(numeric.abs());
            if !(err <= report.max_rel_err) {
                report.max_rel_err = if err.is_nan() { f64::INFINITY } else { err };
                report.worst = (k, i);
            }
        }
    }
    report
}
