//! Gradient-based MCMC: multinomial NUTS with step-size and diagonal
//! metric adaptation, convergence diagnostics and draw export.

mod adapt;
pub mod check;
pub mod diagnostics;
mod nuts;
pub mod output;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use check::{check_gradient, GradientReport};
pub use diagnostics::{ess, split_rhat, summarize, ParameterSummary};
pub use nuts::leapfrog;

/// A log density on an unconstrained real vector space. Constraint
/// Jacobians are folded into `log_density_grad`.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Returns the log density at `theta` and writes its gradient into `grad`.
    fn log_density_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64;

    fn log_density(&self, theta: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.log_density_grad(theta, &mut g)
    }

    /// Names of the constrained quantities written by `constrain`.
    fn parameter_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("theta[{}]", i + 1)).collect()
    }

    /// Maps an unconstrained point to the reported parameter values.
    fn constrain(&self, theta: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(theta);
    }
}

impl<T: LogDensity + ?Sized> LogDensity for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        (**self).log_density_grad(theta, grad)
    }
    fn log_density(&self, theta: &[f64]) -> f64 {
        (**self).log_density(theta)
    }
    fn parameter_names(&self) -> Vec<String> {
        (**self).parameter_names()
    }
    fn constrain(&self, theta: &[f64], out: &mut Vec<f64>) {
        (**self).constrain(theta, out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup_iters: usize,
    pub sampling_iters: usize,
    pub seed: u64,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    /// Half-width of the uniform initialization box.
    pub init_radius: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            warmup_iters: 1000,
            sampling_iters: 1000,
            seed: 2020,
            target_accept: 0.8,
            max_tree_depth: 10,
            init_radius: 2.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.sampling_iters == 0 || self.max_tree_depth == 0 {
            return Err(Error::invalid(
                "chains, sampling_iters and max_tree_depth must all be >= 1",
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::invalid(format!(
                "target_accept {} must lie in (0, 1)",
                self.target_accept
            )));
        }
        if !(self.init_radius >= 0.0) {
            return Err(Error::invalid("init_radius must be >= 0"));
        }
        Ok(())
    }
}

/// Per-iteration sampler statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterStats {
    pub accept_stat: f64,
    pub step_size: f64,
    pub tree_depth: usize,
    pub n_leapfrog: usize,
    pub divergent: bool,
    pub energy: f64,
    pub lp: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorDraws {
    pub names: Vec<String>,
    pub chains: usize,
    pub iters: usize,
    /// Flattened `[chain][iteration][parameter]`, constrained scale.
    pub values: Vec<f64>,
    /// Flattened `[chain][iteration]`; empty when read back from a draws file.
    pub stats: Vec<IterStats>,
}

impl PosteriorDraws {
    pub fn new(names: Vec<String>, chains: usize, iters: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != chains * iters * names.len() {
            return Err(Error::invalid(format!(
                "draw array has {} values, expected {} chains x {} iterations x {} parameters",
                values.len(),
                chains,
                iters,
                names.len()
            )));
        }
        Ok(PosteriorDraws {
            names,
            chains,
            iters,
            values,
            stats: Vec::new(),
        })
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }

    pub fn n_draws(&self) -> usize {
        self.chains * self.iters
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn draw(&self, chain: usize, iter: usize) -> &[f64] {
        let p = self.n_params();
        let start = (chain * self.iters + iter) * p;
        &self.values[start..start + p]
    }

    /// Draw by flat index over chains then iterations.
    pub fn flat_draw(&self, k: usize) -> &[f64] {
        let p = self.n_params();
        &self.values[k * p..(k + 1) * p]
    }

    /// Per-chain series of one parameter.
    pub fn chains_of(&self, param: usize) -> Vec<Vec<f64>> {
        (0..self.chains)
            .map(|c| (0..self.iters).map(|i| self.draw(c, i)[param]).collect())
            .collect()
    }

    /// All draws of one parameter, chains concatenated.
    pub fn pooled(&self, param: usize) -> Vec<f64> {
        (0..self.n_draws()).map(|k| self.flat_draw(k)[param]).collect()
    }

    pub fn divergences(&self) -> usize {
        self.stats.iter().filter(|s| s.divergent).count()
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<PosteriorDraws> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.index_of(n)
                    .ok_or_else(|| Error::invalid(format!("no parameter named {n}")))
            })
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(self.n_draws() * idx.len());
        for k in 0..self.n_draws() {
            let d = self.flat_draw(k);
            values.extend(idx.iter().map(|&i| d[i]));
        }
        let mut out = PosteriorDraws::new(names.to_vec(), self.chains, self.iters, values)?;
        out.stats = self.stats.clone();
        Ok(out)
    }
}

/// One chain's output: constrained draws and statistics.
pub(crate) struct ChainRun {
    pub values: Vec<f64>,
    pub stats: Vec<IterStats>,
}

/// Runs `cfg.chains` independent chains, in parallel where the thread pool
/// allows. Output is bit-identical for a fixed seed.
pub fn sample<T: LogDensity + ?Sized>(target: &T, cfg: &SamplerConfig) -> Result<PosteriorDraws> {
    cfg.validate()?;
    if target.dim() == 0 {
        return Err(Error::invalid("target has dimension 0"));
    }
    let names = target.parameter_names();
    let runs: Vec<Result<ChainRun>> = (0..cfg.chains)
        .into_par_iter()
        .map(|chain| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chain as u64);
            nuts::run_chain(target, cfg, &mut rng, names.len())
        })
        .collect();
    let mut values = Vec::with_capacity(cfg.chains * cfg.sampling_iters * names.len());
    let mut stats = Vec::with_capacity(cfg.chains * cfg.sampling_iters);
    for (chain, run) in runs.into_iter().enumerate() {
        let run = run?;
        let div = run.stats.iter().filter(|s| s.divergent).count();
        if div > 0 {
            log::warn!("chain {}: {div} divergent transitions", chain + 1);
        }
        values.extend(run.values);
        stats.extend(run.stats);
    }
    let mut draws = PosteriorDraws::new(names, cfg.chains, cfg.sampling_iters, values)?;
    draws.stats = stats;
    Ok(draws)
}
