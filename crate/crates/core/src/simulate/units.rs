//! Unit-level synthetic data: class, covariates, population, a Matérn 3/2
//! spatial field and beta-binomial user counts.
//!
//! Edges: class drives working age, density and radiance; density drives
//! radiance; working age, radiance and the field drive uptake. Density is
//! recorded but never enters uptake.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{Duc, MultiPolygon, RawUnit, Rect, SplitOptions, UptakeDataset};
use crate::models::hsgp::matern32_kernel;
use crate::models::predict::draw_uptake_count;
use crate::special::{logit, sigmoid};

/// Generating coefficients, indexed rural, peri-urban, urban.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthParams {
    pub a: [f64; 3],
    pub b_w: [f64; 3],
    pub b_l: [f64; 3],
    /// Zero gives binomial counts.
    pub rho: [f64; 3],
    /// Zero switches the field off.
    pub sigma: f64,
    pub delta: f64,
}

impl Default for TruthParams {
    fn default() -> Self {
        TruthParams {
            a: [-4.123, -4.054, -3.694],
            b_w: [0.306, 0.376, 0.125],
            b_l: [0.511, 0.286, 0.126],
            rho: [0.006, 0.004, 0.007],
            sigma: 0.352,
            delta: 0.839,
        }
    }
}

impl TruthParams {
    pub fn validate(&self) -> Result<()> {
        let finite = self.a.iter().chain(&self.b_w).chain(&self.b_l).all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("coefficients must be finite"));
        }
        if self.rho.iter().any(|r| !(*r >= 0.0 && *r < 1.0)) {
            return Err(Error::invalid("rho must lie in [0, 1)"));
        }
        if !(self.sigma >= 0.0) || !(self.delta > 0.0) {
            return Err(Error::invalid("sigma must be >= 0 and delta > 0"));
        }
        Ok(())
    }
}

/// Where unit centroids go. Both cover a 1 by 3 degree region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Layout {
    /// Uniform centroids on lon [121, 122], lat [9, 12].
    Scatter,
    /// Square units of `GRID_STEP` degrees, `cols` wide and `rows` tall,
    /// from (120, 8); unit `i` sits at column `i % cols`, row `i / cols`.
    Grid { cols: usize, rows: usize },
}

pub const GRID_STEP: f64 = 0.125;
pub const GRID_ORIGIN: [f64; 2] = [120.0, 8.0];

impl Layout {
    pub fn cell(&self, i: usize) -> Option<Rect> {
        match *self {
            Layout::Scatter => None,
            Layout::Grid { cols, .. } => {
                let (c, r) = ((i % cols) as f64, (i / cols) as f64);
                let x = GRID_ORIGIN[0] + c * GRID_STEP;
                let y = GRID_ORIGIN[1] + r * GRID_STEP;
                Rect::new(x, y, x + GRID_STEP, y + GRID_STEP).ok()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnitSimConfig {
    pub n_units: usize,
    /// Class probabilities, rural, peri-urban, urban.
    pub duc_mix: [f64; 3],
    pub truth: TruthParams,
    /// Mean census population per class.
    pub pop_mean: [f64; 3],
    /// Log-scale SD of population.
    pub pop_log_sd: f64,
    pub layout: Layout,
    /// Seed of the spatial field; `None` reuses `seed`.
    pub field_seed: Option<u64>,
    pub train_fraction: f64,
    pub split_seed: u64,
    pub seed: u64,
}

impl Default for UnitSimConfig {
    fn default() -> Self {
        UnitSimConfig {
            n_units: 1200,
            duc_mix: [0.55, 0.30, 0.15],
            truth: TruthParams::default(),
            pop_mean: [26658.0, 42748.0, 203762.0],
            pop_log_sd: 0.5,
            layout: Layout::Scatter,
            field_seed: None,
            train_fraction: 0.8,
            split_seed: 2020,
            seed: 2020,
        }
    }
}

impl UnitSimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_units < 2 {
            return Err(Error::invalid("n_units must be >= 2"));
        }
        let total: f64 = self.duc_mix.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.duc_mix.iter().any(|p| *p < 0.0) {
            return Err(Error::invalid("duc_mix must be non-negative and sum to 1"));
        }
        if self.pop_mean.iter().any(|m| !(*m >= 1.0)) || !(self.pop_log_sd >= 0.0) {
            return Err(Error::invalid("pop_mean must be >= 1 and pop_log_sd >= 0"));
        }
        if let Layout::Grid { cols, rows } = self.layout {
            if cols * rows != self.n_units {
                return Err(Error::invalid(format!(
                    "grid {cols} x {rows} does not hold {} units",
                    self.n_units
                )));
            }
        }
        self.truth.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitTruth {
    pub unit_id: String,
    pub duc: Duc,
    pub n: u64,
    pub fb: u64,
    pub working_age_prop: f64,
    pub log_density: f64,
    pub radiance: f64,
    pub centroid: [f64; 2],
    pub spatial: f64,
    pub eta: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub params: TruthParams,
    pub units: Vec<UnitTruth>,
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn pick_duc(mix: &[f64; 3], rng: &mut impl Rng) -> Duc {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in mix.iter().enumerate() {
        acc += p;
        if u < acc {
            return Duc::from_index(i);
        }
    }
    Duc::Urban
}

/// Exact GP draw `L ε` with `K = L Lᵀ`; retries once with 1e-8 jitter.
pub fn matern_field(points: &[[f64; 2]], sigma: f64, delta: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let n = points.len();
    if sigma == 0.0 || n == 0 {
        return Ok(vec![0.0; n]);
    }
    let k = DMatrix::from_fn(n, n, |i, j| {
        let d = ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt();
        matern32_kernel(d, sigma, delta)
    });
    let chol = match k.clone().cholesky() {
        Some(c) => c,
        None => (k + DMatrix::identity(n, n) * 1e-8)
            .cholesky()
            .ok_or_else(|| Error::invalid("spatial covariance is not positive definite, even with jitter"))?,
    };
    let eps = DVector::from_iterator(n, (0..n).map(|_| normal(rng)));
    Ok((chol.l() * eps).iter().copied().collect())
}

/// Draws a dataset and its truth. Covariates are standardized over the
/// training split, and the field lives on the standardized coordinates.
pub fn simulate_units(cfg: &UnitSimConfig) -> Result<(UptakeDataset, SimTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = cfg.n_units.to_string().len().max(4);
    let age_mean = [logit(0.60), logit(0.63), logit(0.66)];
    let dens_mean = [150f64.ln(), 600f64.ln(), 3000f64.ln()];
    let lum_shift = [0.0, 0.3, 0.8];

    let mut raw = Vec::with_capacity(cfg.n_units);
    let mut log_density = Vec::with_capacity(cfg.n_units);
    for i in 0..cfg.n_units {
        let duc = pick_duc(&cfg.duc_mix, &mut rng);
        let u = duc.index();
        let centroid = match cfg.layout.cell(i) {
            Some(rect) => MultiPolygon::from_rect(&rect)
                .centroid()
                .ok_or_else(|| Error::invalid("empty grid cell"))?,
            None => [121.0 + rng.random::<f64>(), 9.0 + 3.0 * rng.random::<f64>()],
        };
        let working_age_prop = sigmoid(age_mean[u] + 0.15 * normal(&mut rng));
        let dens = dens_mean[u] + 0.5 * normal(&mut rng);
        let radiance = (-2.0 + 0.6 * (dens - 600f64.ln()) + lum_shift[u] + 0.4 * normal(&mut rng)).exp();
        let mu = cfg.pop_mean[u].ln() - 0.5 * cfg.pop_log_sd * cfg.pop_log_sd;
        let n = ((mu + cfg.pop_log_sd * normal(&mut rng)).exp().round() as u64).max(1);
        raw.push(RawUnit {
            unit_id: format!("u{i:0width$}"),
            duc,
            n,
            working_age_prop,
            radiance,
            centroid,
        });
        log_density.push(dens);
    }

    let mut data = UptakeDataset::prepare(
        &raw,
        SplitOptions {
            train_fraction: cfg.train_fraction,
            seed: cfg.split_seed,
        },
    )?;

    let t = &cfg.truth;
    let mut field_rng = ChaCha8Rng::seed_from_u64(cfg.field_seed.unwrap_or(cfg.seed));
    field_rng.set_stream(1);
    let pts: Vec<[f64; 2]> = data.records.iter().map(|r| r.coords()).collect();
    let field = matern_field(&pts, t.sigma, t.delta, &mut field_rng)?;

    let mut count_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    count_rng.set_stream(2);
    let mut units = Vec::with_capacity(cfg.n_units);
    for (i, rec) in data.records.iter_mut().enumerate() {
        let u = rec.duc.index();
        let eta = t.a[u] + t.b_w[u] * rec.w_std + t.b_l[u] * rec.logl_std + field[i];
        let p = sigmoid(eta);
        rec.fb = draw_uptake_count(p, t.rho[u], rec.n, &mut count_rng);
        let r = &raw[i];
        units.push(UnitTruth {
            unit_id: rec.unit_id.clone(),
            duc: rec.duc,
            n: rec.n,
            fb: rec.fb,
            working_age_prop: r.working_age_prop,
            log_density: log_density[i],
            radiance: r.radiance,
            centroid: r.centroid,
            spatial: field[i],
            eta,
            p,
        });
    }
    Ok((
        data,
        SimTruth {
            params: t.clone(),
            units,
        },
    ))
}
