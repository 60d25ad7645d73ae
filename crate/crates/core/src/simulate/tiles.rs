use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::TileCount;
use crate::imputation::TileHistory;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TileSimConfig {
    pub n_tiles: usize,
    /// Scale (mean) of the exponential distribution of tile rates.
    pub lambda_scale: f64,
    pub n_days: usize,
    pub threshold: u32,
    /// `(probability, kept share of days)` pairs. A tile keeps exactly
    /// `round(share * n_days)` entries, at least one.
    pub retention: Vec<(f64, f64)>,
    pub seed: u64,
}

impl Default for TileSimConfig {
    fn default() -> Self {
        TileSimConfig {
            n_tiles: 200,
            lambda_scale: 5.0,
            n_days: 151,
            threshold: 10,
            retention: vec![(1.0, 1.0)],
            seed: 2020,
        }
    }
}

impl TileSimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threshold < 1 {
            return Err(Error::invalid("threshold must be >= 1"));
        }
        if self.n_days == 0 || !(self.lambda_scale > 0.0) {
            return Err(Error::invalid("n_days and lambda_scale must be positive"));
        }
        let total: f64 = self.retention.iter().map(|(p, _)| p).sum();
        if self.retention.is_empty()
            || (total - 1.0).abs() > 1e-9
            || self.retention.iter().any(|&(p, f)| p < 0.0 || !(f > 0.0 && f <= 1.0))
        {
            return Err(Error::invalid(
                "retention must be (probability, share) pairs with probabilities summing to 1 and shares in (0, 1]",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedTile {
    pub history: TileHistory,
    pub lambda: f64,
    /// Day indices (0-based) present in the history, ascending.
    pub days: Vec<usize>,
}

pub(crate) fn pick_retention(retention: &[(f64, f64)], rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(p, share) in retention {
        acc += p;
        if u < acc {
            return share;
        }
    }
    retention.last().map(|r| r.1).unwrap_or(1.0)
}

/// Censors a Poisson draw below `threshold`.
pub fn censor(count: u64, threshold: u32) -> TileCount {
    if count < threshold as u64 {
        TileCount::Censored
    } else {
        TileCount::Observed(count.min(u32::MAX as u64) as u32)
    }
}

pub(crate) fn poisson(lambda: f64, rng: &mut impl Rng) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    Poisson::new(lambda).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Tile rate histories: `λ ~ Exp(scale)`, one Poisson count per kept day,
/// censored below the threshold.
pub fn simulate_tiles(cfg: &TileSimConfig) -> Result<Vec<SimulatedTile>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let exp = Exp::new(1.0 / cfg.lambda_scale).map_err(|e| Error::invalid(e.to_string()))?;
    let width = cfg.n_tiles.max(1).to_string().len();
    (0..cfg.n_tiles)
        .map(|i| {
            let lambda: f64 = exp.sample(&mut rng);
            let share = pick_retention(&cfg.retention, &mut rng);
            let keep = ((share * cfg.n_days as f64).round() as usize).clamp(1, cfg.n_days);
            let mut days = sample_indices(&mut rng, cfg.n_days, keep).into_vec();
            days.sort_unstable();
            let counts = days
                .iter()
                .map(|_| censor(poisson(lambda, &mut rng), cfg.threshold))
                .collect();
            Ok(SimulatedTile {
                history: TileHistory::new(format!("t{i:0width$}"), counts, cfg.threshold)?,
                lambda,
                days,
            })
        })
        .collect()
}
