use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hsgp::{basis_scales, hsgp_basis, Basis};
use super::{betabin_shape, main_parameter_names, ModelConfig, ModelKind, A, BL, BW, DELTA, RHO, SIGMA, Z};
use crate::error::{Error, Result};
use crate::geo::{Duc, UnitRecord};
use crate::sampler::PosteriorDraws;
use crate::special::{beta_binomial_ln_pmf, ln_choose, log_sigmoid, mean, median_sorted, sigmoid};

/// Constrained parameters of one posterior draw.
#[derive(Clone, Debug, PartialEq)]
pub struct UptakeParams {
    pub a: [f64; 3],
    pub b_w: [f64; 3],
    pub b_l: [f64; 3],
    pub rho: Option<[f64; 3]>,
    pub sigma: f64,
    pub delta: f64,
    pub z: Vec<f64>,
}

impl UptakeParams {
    /// Reads a constrained draw laid out as `parameter_names(kind, ..)`.
    pub fn from_row(kind: ModelKind, row: &[f64]) -> Self {
        let arr = |o: usize| [row[o], row[o + 1], row[o + 2]];
        let full = kind == ModelKind::Full;
        UptakeParams {
            a: arr(A),
            b_w: arr(BW),
            b_l: arr(BL),
            rho: kind.overdispersed().then(|| arr(RHO)),
            sigma: if full { row[SIGMA] } else { 0.0 },
            delta: if full { row[DELTA] } else { 1.0 },
            z: if full { row[Z..].to_vec() } else { Vec::new() },
        }
    }

    /// `η = a[U] + b_w[U]·W + b_l[U]·logL + spatial`.
    pub fn linpred(&self, duc: Duc, w: f64, logl: f64, spatial: f64) -> f64 {
        let u = duc.index();
        self.a[u] + self.b_w[u] * w + self.b_l[u] * logl + spatial
    }
}

/// Checks that `draws` carries the columns `config` expects.
fn check_columns(config: &ModelConfig, draws: &PosteriorDraws) -> Result<()> {
    let expected = config.parameter_names();
    let main = main_parameter_names(config.kind);
    if draws.names.len() < main.len() || draws.names[..main.len()] != main[..] {
        return Err(Error::invalid(format!(
            "draws do not match the {} model's parameters",
            config.kind
        )));
    }
    if draws.names.len() != expected.len() {
        return Err(Error::invalid(format!(
            "draws have {} columns, the {} model with n_b = {} needs {}",
            draws.names.len(),
            config.kind,
            config.n_basis(),
            expected.len()
        )));
    }
    Ok(())
}

fn unit_basis(config: &ModelConfig, units: &[UnitRecord]) -> Result<Option<Basis>> {
    if config.kind != ModelKind::Full {
        return Ok(None);
    }
    let b = config
        .boundary
        .ok_or_else(|| Error::invalid("spatial model needs an approximation box"))?;
    let pts: Vec<[f64; 2]> = units.iter().map(|u| u.coords()).collect();
    hsgp_basis(&pts, config.hsgp.n_basis, b).map(Some)
}

fn draw_params(config: &ModelConfig, draws: &PosteriorDraws, units: &[UnitRecord]) -> Result<Vec<UptakeParams>> {
    check_columns(config, draws)?;
    if units.is_empty() {
        return Err(Error::invalid("no units to predict"));
    }
    Ok((0..draws.n_draws())
        .map(|k| UptakeParams::from_row(config.kind, draws.flat_draw(k)))
        .collect())
}

/// Linear predictor per draw and unit, draw-major.
fn eta_matrix(config: &ModelConfig, params: &[UptakeParams], units: &[UnitRecord]) -> Result<Vec<f64>> {
    let basis = unit_basis(config, units)?;
    let mut eta = vec![0.0; params.len() * units.len()];
    let mut f = vec![0.0; units.len()];
    for (k, p) in params.iter().enumerate() {
        if let Some(b) = &basis {
            let v: Vec<f64> = basis_scales(&b.omega_sq, p.sigma, p.delta)
                .iter()
                .zip(&p.z)
                .map(|(s, z)| s * z)
                .collect();
            b.apply(&v, &mut f);
        }
        let row = &mut eta[k * units.len()..(k + 1) * units.len()];
        for (i, u) in units.iter().enumerate() {
            row[i] = p.linpred(u.duc, u.w_std, u.logl_std, f[i]);
        }
    }
    Ok(eta)
}

/// Predictive rate samples, one row per unit and one entry per draw.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveSamples {
    pub kind: ModelKind,
    pub unit_ids: Vec<String>,
    pub rates: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSummary {
    pub unit_id: String,
    pub model: ModelKind,
    pub observed: f64,
    pub mean: f64,
    pub median: f64,
    pub hdi_low: f64,
    pub hdi_high: f64,
}

impl PredictiveSamples {
    pub fn summarize(&self, units: &[UnitRecord], prob: f64) -> Vec<PredictiveSummary> {
        self.unit_ids
            .iter()
            .zip(&self.rates)
            .zip(units)
            .map(|((id, r), u)| {
                let mut s = r.clone();
                s.sort_by(f64::total_cmp);
                let (lo, hi) = hdi_sorted(&s, prob);
                PredictiveSummary {
                    unit_id: id.clone(),
                    model: self.kind,
                    observed: u.rate(),
                    mean: mean(&s),
                    median: median_sorted(&s),
                    hdi_low: lo,
                    hdi_high: hi,
                }
            })
            .collect()
    }
}

/// Shortest interval holding `prob` of the sorted samples.
pub fn hdi_sorted(sorted: &[f64], prob: f64) -> (f64, f64) {
    let n = sorted.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let w = ((prob * n as f64).ceil() as usize).clamp(1, n);
    let mut best = 0;
    for i in 1..=n - w {
        if sorted[i + w - 1] - sorted[i] < sorted[best + w - 1] - sorted[best] {
            best = i;
        }
    }
    (sorted[best], sorted[best + w - 1])
}

pub fn hdi(samples: &[f64], prob: f64) -> (f64, f64) {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    hdi_sorted(&s, prob)
}

/// Users among `n` people at mean uptake `p`: binomial when `rho` is zero,
/// beta-binomial otherwise.
pub fn draw_uptake_count<R: Rng + ?Sized>(p: f64, rho: f64, n: u64, rng: &mut R) -> u64 {
    let mut pi = p;
    if rho > 0.0 {
        let (a, b) = betabin_shape(p, rho);
        if let Ok(d) = Beta::new(a, b) {
            let x: f64 = d.sample(rng);
            if x.is_finite() {
                pi = x;
            }
        }
    }
    match Binomial::new(n, pi.clamp(0.0, 1.0)) {
        Ok(d) => d.sample(rng),
        Err(_) => 0,
    }
}

/// One predictive count per posterior draw for every unit, returned as
/// rates `FB / N`. Unit `i` uses RNG stream `i`, so results do not depend
/// on thread count.
pub fn posterior_predict(
    config: &ModelConfig,
    draws: &PosteriorDraws,
    units: &[UnitRecord],
    seed: u64,
) -> Result<PredictiveSamples> {
    let params = draw_params(config, draws, units)?;
    let eta = eta_matrix(config, &params, units)?;
    let nu = units.len();
    let rates = units
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            params
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let rho = p.rho.map_or(0.0, |r| r[u.duc.index()]);
                    let c = draw_uptake_count(sigmoid(eta[k * nu + i]), rho, u.n, &mut rng);
                    if u.n == 0 {
                        0.0
                    } else {
                        c as f64 / u.n as f64
                    }
                })
                .collect()
        })
        .collect();
    Ok(PredictiveSamples {
        kind: config.kind,
        unit_ids: units.iter().map(|u| u.unit_id.clone()).collect(),
        rates,
    })
}

/// Pointwise log-likelihood, `values[draw * n_units + unit]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLikMatrix {
    pub n_draws: usize,
    pub n_units: usize,
    pub values: Vec<f64>,
}

impl LogLikMatrix {
    pub fn new(n_draws: usize, n_units: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_draws * n_units {
            return Err(Error::invalid("log-likelihood matrix has the wrong size"));
        }
        Ok(LogLikMatrix {
            n_draws,
            n_units,
            values,
        })
    }

    pub fn column(&self, unit: usize) -> Vec<f64> {
        (0..self.n_draws).map(|k| self.values[k * self.n_units + unit]).collect()
    }
}

/// Full log pmf of each unit's observed count under each draw.
pub fn pointwise_loglik(config: &ModelConfig, draws: &PosteriorDraws, units: &[UnitRecord]) -> Result<LogLikMatrix> {
    let params = draw_params(config, draws, units)?;
    let eta = eta_matrix(config, &params, units)?;
    let nu = units.len();
    let lc: Vec<f64> = units.iter().map(|u| ln_choose(u.n, u.fb)).collect();
    let values = eta
        .par_iter()
        .enumerate()
        .map(|(idx, &e)| {
            let (k, i) = (idx / nu, idx % nu);
            let u = &units[i];
            let (n, fb) = (u.n as f64, u.fb as f64);
            match params[k].rho {
                None => lc[i] + fb * log_sigmoid(e) + (n - fb) * log_sigmoid(-e),
                Some(rho) => {
                    let (a, b) = betabin_shape(sigmoid(e), rho[u.duc.index()]);
                    beta_binomial_ln_pmf(u.fb, u.n, a, b)
                }
            }
        })
        .collect();
    LogLikMatrix::new(params.len(), nu, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Split;
    use crate::models::parameter_names;

    fn unit(n: u64) -> UnitRecord {
        UnitRecord {
            unit_id: "u".into(),
            duc: Duc::Urban,
            n,
            fb: n / 2,
            w_std: 0.0,
            logl_std: 0.0,
            lon_std: 0.0,
            lat_std: 0.0,
            split: Split::Test,
        }
    }

    fn draws_with_a(kind: ModelKind, a: f64, n: usize) -> PosteriorDraws {
        let names = parameter_names(kind, 0);
        let mut row = vec![0.0; names.len()];
        row[A..A + 3].copy_from_slice(&[a; 3]);
        if kind.overdispersed() {
            row[RHO..RHO + 3].copy_from_slice(&[0.01; 3]);
        }
        let values = row.iter().copied().cycle().take(row.len() * n).collect();
        PosteriorDraws::new(names, 1, n, values).unwrap()
    }

    fn cfg(kind: ModelKind) -> ModelConfig {
        ModelConfig {
            kind,
            hsgp: Default::default(),
            boundary: None,
        }
    }

    #[test]
    fn certain_uptake_predicts_rate_one() {
        let d = draws_with_a(ModelKind::Bin, f64::INFINITY, 50);
        let p = posterior_predict(&cfg(ModelKind::Bin), &d, &[unit(100)], 1).unwrap();
        assert!(p.rates[0].iter().all(|&r| r == 1.0));
    }

    #[test]
    fn binomial_concentrates() {
        let d = draws_with_a(ModelKind::Bin, 0.0, 400);
        let p = posterior_predict(&cfg(ModelKind::Bin), &d, &[unit(1_000_000)], 2).unwrap();
        assert!((mean(&p.rates[0]) - 0.5).abs() < 0.002);
    }

    #[test]
    fn rates_stay_in_unit_interval() {
        let d = draws_with_a(ModelKind::BetaBin, -3.0, 500);
        let p = posterior_predict(&cfg(ModelKind::BetaBin), &d, &[unit(50), unit(0)], 3).unwrap();
        assert!(p.rates.iter().flatten().all(|r| (0.0..=1.0).contains(r)));
    }

    #[test]
    fn hdi_contains_median_and_is_shortest() {
        let s: Vec<f64> = (0..100).map(|i| ((i as f64) / 99.0 - 0.5).powi(3)).collect();
        let (lo, hi) = hdi(&s, 0.87);
        let mut sorted = s.clone();
        sorted.sort_by(f64::total_cmp);
        let med = median_sorted(&sorted);
        assert!(lo <= med && med <= hi);
        assert_eq!(hdi(&[1.0, 2.0, 3.0, 100.0], 0.75), (1.0, 3.0));
    }

    #[test]
    fn wrong_columns_are_rejected() {
        let d = draws_with_a(ModelKind::Bin, 0.0, 5);
        assert!(posterior_predict(&cfg(ModelKind::BetaBin), &d, &[unit(10)], 1).is_err());
    }

    #[test]
    fn pointwise_loglik_matches_pmf() {
        let d = draws_with_a(ModelKind::Bin, 0.0, 3);
        let mut u = unit(1);
        u.fb = 1;
        let m = pointwise_loglik(&cfg(ModelKind::Bin), &d, &[u]).unwrap();
        assert!(m.values.iter().all(|v| (v - 0.5f64.ln()).abs() < 1e-15));
    }
}
