use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use socialpop::sampler::{
    check_gradient, ess, leapfrog, sample, split_rhat, LogDensity, SamplerConfig,
};

struct StdNormal;

impl LogDensity for StdNormal {
    fn dim(&self) -> usize {
        1
    }
    fn log_density_grad(&self, q: &[f64], g: &mut [f64]) -> f64 {
        g[0] = -q[0];
        -0.5 * q[0] * q[0]
    }
}

/// Exponential with scale 5, sampled on the log scale.
struct ExpScale5;

impl LogDensity for ExpScale5 {
    fn dim(&self) -> usize {
        1
    }
    fn log_density_grad(&self, q: &[f64], g: &mut [f64]) -> f64 {
        let x = q[0].exp();
        g[0] = 1.0 - x / 5.0;
        -x / 5.0 + q[0]
    }
    fn parameter_names(&self) -> Vec<String> {
        vec!["x".into()]
    }
    fn constrain(&self, q: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.push(q[0].exp());
    }
}

/// Bivariate normal with unit variances and correlation 0.8.
struct Correlated;

const RHO: f64 = 0.8;

impl LogDensity for Correlated {
    fn dim(&self) -> usize {
        2
    }
    fn log_density_grad(&self, q: &[f64], g: &mut [f64]) -> f64 {
        let d = 1.0 - RHO * RHO;
        g[0] = -(q[0] - RHO * q[1]) / d;
        g[1] = -(q[1] - RHO * q[0]) / d;
        -0.5 * (q[0] * q[0] - 2.0 * RHO * q[0] * q[1] + q[1] * q[1]) / d
    }
}

struct Empty;

impl LogDensity for Empty {
    fn dim(&self) -> usize {
        0
    }
    fn log_density_grad(&self, _: &[f64], _: &mut [f64]) -> f64 {
        0.0
    }
}

fn cfg(seed: u64) -> SamplerConfig {
    SamplerConfig {
        seed,
        ..SamplerConfig::default()
    }
}

#[test]
fn standard_normal_moments() {
    let draws = sample(&StdNormal, &cfg(11)).unwrap();
    let x = draws.pooled(0);
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let e = ess(&draws.chains_of(0));
    assert!(m.abs() < 4.0 / e.sqrt(), "mean {m}, ess {e}");
    assert!((sd - 1.0).abs() < 0.1, "sd {sd}");
    assert!(split_rhat(&draws.chains_of(0)) < 1.01);
}

#[test]
fn exponential_mean_through_log_transform() {
    let draws = sample(&ExpScale5, &cfg(12)).unwrap();
    let x = draws.pooled(0);
    assert!(x.iter().all(|&v| v > 0.0));
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let e = ess(&draws.chains_of(0));
    // the exponential SD equals its mean
    assert!((m - 5.0).abs() < 4.0 * 5.0 / e.sqrt(), "mean {m}, ess {e}");
}

#[test]
fn correlated_gaussian_covariance() {
    let draws = sample(&Correlated, &cfg(13)).unwrap();
    let (a, b) = (draws.pooled(0), draws.pooled(1));
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov = |x: &[f64], mx: f64, y: &[f64], my: f64| {
        x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum::<f64>() / (n - 1.0)
    };
    let s = [cov(&a, ma, &a, ma), cov(&a, ma, &b, mb), cov(&b, mb, &b, mb)];
    let err = ((s[0] - 1.0).powi(2) + 2.0 * (s[1] - RHO).powi(2) + (s[2] - 1.0).powi(2)).sqrt();
    let norm = (2.0 + 2.0 * RHO * RHO).sqrt();
    assert!(err / norm < 0.15, "relative Frobenius error {}", err / norm);
}

#[test]
fn fixed_seed_is_bit_reproducible() {
    let small = SamplerConfig {
        warmup_iters: 200,
        sampling_iters: 100,
        ..cfg(5)
    };
    let a = sample(&Correlated, &small).unwrap();
    let b = sample(&Correlated, &small).unwrap();
    assert_eq!(a.values, b.values);
    let c = sample(&Correlated, &SamplerConfig { seed: 6, ..small }).unwrap();
    assert_ne!(a.values, c.values);
}

#[test]
fn zero_dimensional_target_is_rejected() {
    assert!(sample(&Empty, &cfg(1)).is_err());
}

#[test]
fn invalid_config_is_rejected() {
    let bad = SamplerConfig {
        chains: 0,
        ..SamplerConfig::default()
    };
    assert!(sample(&StdNormal, &bad).is_err());
}

#[test]
fn leapfrog_round_trip_on_correlated_target() {
    let inv_metric = [0.7, 1.3];
    let mut q = vec![0.4, -0.9];
    let mut p = vec![-0.3, 1.1];
    let mut g = vec![0.0; 2];
    Correlated.log_density_grad(&q, &mut g);
    let (q0, p0) = (q.clone(), p.clone());
    for _ in 0..100 {
        leapfrog(&Correlated, &mut q, &mut p, &mut g, 0.05, &inv_metric);
    }
    p.iter_mut().for_each(|v| *v = -*v);
    for _ in 0..100 {
        leapfrog(&Correlated, &mut q, &mut p, &mut g, 0.05, &inv_metric);
    }
    for i in 0..2 {
        assert!((q[i] - q0[i]).abs() < 1e-8);
        assert!((p[i] + p0[i]).abs() < 1e-8);
    }
}

#[test]
fn test_targets_pass_gradient_check() {
    assert!(check_gradient(&ExpScale5, 20, 2.0, 1).passes(1e-4));
    assert!(check_gradient(&Correlated, 20, 2.0, 1).passes(1e-4));
}

#[test]
fn iid_chains_rhat_and_ess() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let chain = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    };
    let two: Vec<Vec<f64>> = (0..2).map(|_| chain(&mut rng, 5000)).collect();
    let r = split_rhat(&two);
    assert!((0.99..=1.02).contains(&r), "rhat {r}");

    let four: Vec<Vec<f64>> = (0..4).map(|_| chain(&mut rng, 1000)).collect();
    let e = ess(&four);
    assert!((3200.0..=4800.0).contains(&e), "ess {e}");
}

#[test]
fn ar1_ess_matches_theory() {
    let phi: f64 = 0.9;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let chains: Vec<Vec<f64>> = (0..4)
        .map(|_| {
            let mut x: f64 = rng.sample::<f64, _>(StandardNormal) / (1.0 - phi * phi).sqrt();
            (0..5000)
                .map(|_| {
                    x = phi * x + rng.sample::<f64, _>(StandardNormal);
                    x
                })
                .collect()
        })
        .collect();
    let n = 20000.0;
    let theory = n * (1.0 - phi) / (1.0 + phi);
    let e = ess(&chains);
    assert!((e / theory - 1.0).abs() < 0.3, "ess {e}, theory {theory}");
}

#[test]
fn constant_series_ess_is_draw_count() {
    let chains = vec![vec![2.5; 100]; 4];
    assert_eq!(ess(&chains), 400.0);
    assert_eq!(split_rhat(&chains), 1.0);
}
