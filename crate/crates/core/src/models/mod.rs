//! Hierarchical binomial, beta-binomial and spatial beta-binomial models of
//! the share of a unit's population that is a recorded platform user.

pub mod hsgp;
pub mod predict;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{Split, UnitRecord, UptakeDataset};
use crate::sampler::{sample, LogDensity, PosteriorDraws, SamplerConfig};
use crate::special::{digamma, ln_choose, ln_gamma, log_sigmoid, sigmoid};

pub use hsgp::{hsgp_basis, hsgp_effect, matern32_kernel, matern32_spectral_density, Basis, Boundary, HsgpSpec};
pub use predict::{
    draw_uptake_count,
    hdi, pointwise_loglik, posterior_predict, LogLikMatrix, PredictiveSamples, PredictiveSummary, UptakeParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bin,
    BetaBin,
    Full,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Bin, ModelKind::BetaBin, ModelKind::Full];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Bin => "bin",
            ModelKind::BetaBin => "betabin",
            ModelKind::Full => "full",
        }
    }

    pub fn overdispersed(self) -> bool {
        self != ModelKind::Bin
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bin" => Ok(ModelKind::Bin),
            "betabin" => Ok(ModelKind::BetaBin),
            "full" => Ok(ModelKind::Full),
            other => Err(Error::invalid(format!(
                "unknown model kind '{other}' (expected bin, betabin or full)"
            ))),
        }
    }
}

// Unconstrained layout. Constrained draws use the same positions.
pub(crate) const A_MU: usize = 0;
pub(crate) const A_SIGMA: usize = 1;
pub(crate) const BW_SIGMA: usize = 2;
pub(crate) const BL_SIGMA: usize = 3;
pub(crate) const A: usize = 4;
pub(crate) const BW: usize = 7;
pub(crate) const BL: usize = 10;
pub(crate) const RHO: usize = 13;
pub(crate) const SIGMA: usize = 16;
pub(crate) const DELTA: usize = 17;
pub(crate) const Z: usize = 18;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

pub fn parameter_names(kind: ModelKind, n_basis: usize) -> Vec<String> {
    let mut names: Vec<String> = ["a_mu", "a_sigma", "b_w_sigma", "b_l_sigma"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for p in ["a", "b_w", "b_l"] {
        names.extend((1..=3).map(|u| format!("{p}[{u}]")));
    }
    if kind.overdispersed() {
        names.extend((1..=3).map(|u| format!("rho[{u}]")));
    }
    if kind == ModelKind::Full {
        names.push("sigma".into());
        names.push("delta".into());
        for j in 1..=n_basis {
            names.extend((1..=n_basis).map(|k| format!("z[{j},{k}]")));
        }
    }
    names
}

/// Names of the structural parameters (everything except basis weights).
pub fn main_parameter_names(kind: ModelKind) -> Vec<String> {
    parameter_names(kind, 0)
}

/// `α = p(1-ρ)/ρ`, `β = (1-p)(1-ρ)/ρ`.
pub fn betabin_shape(p: f64, rho: f64) -> (f64, f64) {
    let c = (1.0 - rho) / rho;
    (p * c, (1.0 - p) * c)
}

/// Beta-binomial log pmf parameterized by mean `p` and overdispersion `ρ`;
/// `-inf` for `ρ` outside (0, 1).
pub fn betabin_ln_pmf_mean(k: u64, n: u64, p: f64, rho: f64) -> f64 {
    if !(rho > 0.0 && rho < 1.0) {
        return f64::NEG_INFINITY;
    }
    let (a, b) = betabin_shape(p, rho);
    crate::special::beta_binomial_ln_pmf(k, n, a, b)
}

/// Model choice plus whatever the spatial term needs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub hsgp: HsgpSpec,
    /// Approximation box; required for the spatial model.
    pub boundary: Option<Boundary>,
}

impl ModelConfig {
    /// Box from every unit's coordinates, so test units fall inside it too.
    pub fn for_dataset(kind: ModelKind, hsgp: HsgpSpec, data: &UptakeDataset) -> Result<Self> {
        hsgp.validate()?;
        let boundary = if kind == ModelKind::Full {
            let pts: Vec<[f64; 2]> = data.records.iter().map(|r| r.coords()).collect();
            Some(hsgp.boundary(&pts)?)
        } else {
            None
        };
        Ok(ModelConfig { kind, hsgp, boundary })
    }

    pub fn n_basis(&self) -> usize {
        if self.kind == ModelKind::Full {
            self.hsgp.n_basis
        } else {
            0
        }
    }

    pub fn parameter_names(&self) -> Vec<String> {
        parameter_names(self.kind, self.n_basis())
    }
}

/// Posterior density of one of the three models over the training units.
#[derive(Clone, Debug)]
pub struct UptakeModel {
    pub config: ModelConfig,
    duc: Vec<usize>,
    n: Vec<f64>,
    k: Vec<f64>,
    w: Vec<f64>,
    l: Vec<f64>,
    ln_choose: Vec<f64>,
    basis: Option<Basis>,
}

impl UptakeModel {
    pub fn new(config: ModelConfig, units: &[UnitRecord]) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::invalid("uptake model needs at least one training unit"));
        }
        for u in units {
            if u.fb > u.n {
                return Err(Error::invalid(format!(
                    "unit {}: FB = {} exceeds N = {}",
                    u.unit_id, u.fb, u.n
                )));
            }
            if ![u.w_std, u.logl_std, u.lon_std, u.lat_std].iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(format!("unit {}: non-finite covariate", u.unit_id)));
            }
        }
        let basis = if config.kind == ModelKind::Full {
            config.hsgp.validate()?;
            let b = config
                .boundary
                .ok_or_else(|| Error::invalid("spatial model needs an approximation box"))?;
            let pts: Vec<[f64; 2]> = units.iter().map(|u| u.coords()).collect();
            Some(hsgp_basis(&pts, config.hsgp.n_basis, b)?)
        } else {
            None
        };
        Ok(UptakeModel {
            config,
            duc: units.iter().map(|u| u.duc.index()).collect(),
            n: units.iter().map(|u| u.n as f64).collect(),
            k: units.iter().map(|u| u.fb as f64).collect(),
            w: units.iter().map(|u| u.w_std).collect(),
            l: units.iter().map(|u| u.logl_std).collect(),
            ln_choose: units.iter().map(|u| ln_choose(u.n, u.fb)).collect(),
            basis,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn n_units(&self) -> usize {
        self.n.len()
    }

    fn n_z(&self) -> usize {
        self.basis.as_ref().map_or(0, |b| b.n_columns)
    }

    /// Prior terms and their gradient for everything except the likelihood.
    fn log_prior(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let mut lp = -LN_SQRT_2PI - 0.5 * (theta[A_MU] + 4.0).powi(2);
        grad[A_MU] = -(theta[A_MU] + 4.0);
        for i in [A_SIGMA, BW_SIGMA, BL_SIGMA] {
            // Exp(1) with log-transform Jacobian
            let s = theta[i].exp();
            lp += -s + theta[i];
            grad[i] = -s + 1.0;
        }
        for i in A..RHO {
            lp += -LN_SQRT_2PI - 0.5 * theta[i] * theta[i];
            grad[i] = -theta[i];
        }
        if self.kind().overdispersed() {
            for i in RHO..RHO + 3 {
                // Beta(1, 3) with logit Jacobian: ln 3 + ln ρ + 3 ln(1 - ρ)
                let r = theta[i];
                lp += 3f64.ln() + log_sigmoid(r) + 3.0 * log_sigmoid(-r);
                grad[i] = 1.0 - 4.0 * sigmoid(r);
            }
        }
        if self.kind() == ModelKind::Full {
            let sigma = theta[SIGMA].exp();
            // half-normal(0, 1)
            lp += std::f64::consts::LN_2 - LN_SQRT_2PI - 0.5 * sigma * sigma + theta[SIGMA];
            grad[SIGMA] = -sigma * sigma + 1.0;
            // log-normal(0, 1): normal on ln δ after the Jacobian
            lp += -LN_SQRT_2PI - 0.5 * theta[DELTA] * theta[DELTA];
            grad[DELTA] = -theta[DELTA];
            for i in Z..Z + self.n_z() {
                lp += -LN_SQRT_2PI - 0.5 * theta[i] * theta[i];
                grad[i] = -theta[i];
            }
        }
        lp
    }
}

/// Per-unit log-likelihood and its derivatives with respect to `η` and
/// `r = logit ρ` (the latter zero for the binomial).
#[inline]
fn unit_terms(kind: ModelKind, eta: f64, n: f64, k: f64, rho_r: f64, lg_c: f64, psi_c: f64) -> (f64, f64, f64) {
    if kind == ModelKind::Bin {
        let ll = k * log_sigmoid(eta) + (n - k) * log_sigmoid(-eta);
        return (ll, k - n * sigmoid(eta), 0.0);
    }
    let c = (-rho_r).exp();
    let p = sigmoid(eta);
    let alpha = p * c;
    let beta = (1.0 - p) * c;
    let ll = ln_gamma(k + alpha) + ln_gamma(n - k + beta) - ln_gamma(n + c) - ln_gamma(alpha) - ln_gamma(beta) + lg_c;
    let psi_n = digamma(n + c);
    let d_alpha = digamma(k + alpha) - psi_n - digamma(alpha) + psi_c;
    let d_beta = digamma(n - k + beta) - psi_n - digamma(beta) + psi_c;
    let d_eta = c * p * (1.0 - p) * (d_alpha - d_beta);
    let d_r = -(alpha * d_alpha + beta * d_beta);
    (ll, d_eta, d_r)
}

impl LogDensity for UptakeModel {
    fn dim(&self) -> usize {
        match self.kind() {
            ModelKind::Bin => RHO,
            ModelKind::BetaBin => SIGMA,
            ModelKind::Full => Z + self.n_z(),
        }
    }

    fn log_density_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let kind = self.kind();
        let mut lp = self.log_prior(theta, grad);

        let a_mu = theta[A_MU];
        let (a_sig, bw_sig, bl_sig) = (theta[A_SIGMA].exp(), theta[BW_SIGMA].exp(), theta[BL_SIGMA].exp());
        let mut a = [0.0; 3];
        let mut bw = [0.0; 3];
        let mut bl = [0.0; 3];
        for u in 0..3 {
            a[u] = a_mu + a_sig * theta[A + u];
            bw[u] = bw_sig * theta[BW + u];
            bl[u] = bl_sig * theta[BL + u];
        }
        let mut r = [0.0; 3];
        let mut ln_c = [0.0; 3];
        let mut psi_c = [0.0; 3];
        if kind.overdispersed() {
            for u in 0..3 {
                r[u] = theta[RHO + u];
                let c = (-r[u]).exp();
                ln_c[u] = ln_gamma(c);
                psi_c[u] = digamma(c);
            }
        }

        let mut f = vec![0.0; self.n_units()];
        let mut scaled = Vec::new();
        if let Some(basis) = &self.basis {
            let s = hsgp::basis_scales(&basis.omega_sq, theta[SIGMA].exp(), theta[DELTA].exp());
            scaled = s;
            let v: Vec<f64> = scaled.iter().zip(&theta[Z..]).map(|(s, z)| s * z).collect();
            basis.apply(&v, &mut f);
        }

        let mut g_a = [0.0; 3];
        let mut g_bw = [0.0; 3];
        let mut g_bl = [0.0; 3];
        let mut g_r = [0.0; 3];
        let mut g_eta = vec![0.0; self.n_units()];
        for i in 0..self.n_units() {
            let u = self.duc[i];
            let eta = a[u] + bw[u] * self.w[i] + bl[u] * self.l[i] + f[i];
            let (ll, d_eta, d_r) = unit_terms(kind, eta, self.n[i], self.k[i], r[u], ln_c[u], psi_c[u]);
            lp += ll + self.ln_choose[i];
            g_a[u] += d_eta;
            g_bw[u] += d_eta * self.w[i];
            g_bl[u] += d_eta * self.l[i];
            g_r[u] += d_r;
            g_eta[i] = d_eta;
        }

        for u in 0..3 {
            grad[A_MU] += g_a[u];
            grad[A + u] += a_sig * g_a[u];
            grad[A_SIGMA] += a_sig * theta[A + u] * g_a[u];
            grad[BW + u] += bw_sig * g_bw[u];
            grad[BW_SIGMA] += bw[u] * g_bw[u];
            grad[BL + u] += bl_sig * g_bl[u];
            grad[BL_SIGMA] += bl[u] * g_bl[u];
            if kind.overdispersed() {
                grad[RHO + u] += g_r[u];
            }
        }

        if let Some(basis) = &self.basis {
            let mut g = vec![0.0; basis.n_columns];
            basis.apply_transpose(&g_eta, &mut g);
            let delta = theta[DELTA].exp();
            let (mut d_sigma, mut d_delta) = (0.0, 0.0);
            for j in 0..basis.n_columns {
                let zj = theta[Z + j];
                let t = scaled[j] * zj * g[j];
                grad[Z + j] += scaled[j] * g[j];
                d_sigma += t;
                d_delta += t * 0.5 * (-3.0 + 15.0 / (3.0 + delta * delta * basis.omega_sq[j]));
            }
            grad[SIGMA] += d_sigma;
            grad[DELTA] += d_delta;
        }

        if lp.is_finite() {
            lp
        } else {
            f64::NEG_INFINITY
        }
    }

    fn parameter_names(&self) -> Vec<String> {
        parameter_names(self.kind(), self.basis.as_ref().map_or(0, |_| self.config.hsgp.n_basis))
    }

    fn constrain(&self, theta: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(theta);
        for i in [A_SIGMA, BW_SIGMA, BL_SIGMA] {
            out[i] = theta[i].exp();
        }
        for u in 0..3 {
            out[A + u] = theta[A_MU] + out[A_SIGMA] * theta[A + u];
            out[BW + u] = out[BW_SIGMA] * theta[BW + u];
            out[BL + u] = out[BL_SIGMA] * theta[BL + u];
        }
        if self.kind().overdispersed() {
            for i in RHO..RHO + 3 {
                out[i] = sigmoid(theta[i]);
            }
        }
        if self.kind() == ModelKind::Full {
            out[SIGMA] = theta[SIGMA].exp();
            out[DELTA] = theta[DELTA].exp();
        }
    }
}

/// Samples the model's posterior given the training units of `data`.
pub fn fit(config: &ModelConfig, data: &UptakeDataset, sampler: &SamplerConfig) -> Result<PosteriorDraws> {
    let train = data.subset(Split::Train);
    let model = UptakeModel::new(*config, &train)?;
    sample(&model, sampler)
}

/// `ln N(x | 0, 1)`, used by tests comparing model densities.
pub fn std_normal_ln_pdf(x: f64) -> f64 {
    -0.5 * (2.0 * PI).ln() - 0.5 * x * x
}
