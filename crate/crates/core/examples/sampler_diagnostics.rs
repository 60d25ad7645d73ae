//! NUTS on a correlated Gaussian, with split R-hat and ESS per coordinate.

use socialpop::sampler::{check_gradient, sample, summarize, LogDensity, SamplerConfig};

struct Correlated {
    rho: f64,
}

impl LogDensity for Correlated {
    fn dim(&self) -> usize {
        2
    }

    fn log_density_grad(&self, q: &[f64], g: &mut [f64]) -> f64 {
        let d = 1.0 - self.rho * self.rho;
        g[0] = -(q[0] - self.rho * q[1]) / d;
        g[1] = -(q[1] - self.rho * q[0]) / d;
        -0.5 * (q[0] * q[0] - 2.0 * self.rho * q[0] * q[1] + q[1] * q[1]) / d
    }
}

fn main() -> socialpop::Result<()> {
    let target = Correlated { rho: 0.9 };
    let report = check_gradient(&target, 10, 3.0, 1);
    println!("gradient check: max relative error {:.2e}", report.max_rel_err);
    let draws = sample(&target, &SamplerConfig::default())?;
    println!("divergences: {}", draws.divergences());
    println!("{:>10} {:>8} {:>8} {:>8} {:>8}", "param", "mean", "sd", "rhat", "ess");
    for p in summarize(&draws) {
        println!("{:>10} {:8.3} {:8.3} {:8.4} {:8.0}", p.name, p.mean, p.sd, p.rhat, p.ess);
    }
    Ok(())
}
