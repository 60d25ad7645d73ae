//! Censored-Poisson model for tile count histories and posterior imputation
//! of censored counts on a reference date.

pub mod impute;
pub mod likelihood;
pub mod model;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{TileCount, TileObservation};

pub use impute::{impute, imputation_ppc, ImputedCount, ImputedCounts, PpcRow, Provenance};
pub use likelihood::{ln_poisson_cdf_below, HistoryStats};
pub use model::{ImputationModel, RateSlot};

/// Counts reported for one tile over the modelled windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileHistory {
    pub tile_id: String,
    pub counts: Vec<TileCount>,
}

impl TileHistory {
    pub fn new(tile_id: impl Into<String>, counts: Vec<TileCount>, threshold: u32) -> Result<Self> {
        let tile_id = tile_id.into();
        if counts.is_empty() {
            return Err(Error::invalid(format!("tile {tile_id}: empty history")));
        }
        if let Some(c) = counts.iter().filter_map(|c| c.observed()).find(|&c| c < threshold) {
            return Err(Error::invalid(format!(
                "tile {tile_id}: observed count {c} below threshold {threshold}"
            )));
        }
        Ok(TileHistory { tile_id, counts })
    }

    pub fn n_entries(&self) -> usize {
        self.counts.len()
    }

    pub fn stats(&self) -> HistoryStats {
        let mut s = HistoryStats::default();
        for c in &self.counts {
            match c {
                TileCount::Observed(u) => {
                    s.n_observed += 1;
                    s.sum_observed += *u as f64;
                    s.sum_ln_factorial += crate::special::ln_gamma(*u as f64 + 1.0);
                }
                TileCount::Censored => s.n_censored += 1,
            }
        }
        s
    }

    pub fn observed_values(&self) -> Vec<f64> {
        self.counts.iter().filter_map(|c| c.observed()).map(f64::from).collect()
    }

    pub fn all_censored(&self) -> bool {
        self.counts.iter().all(|c| c.is_censored())
    }
}

/// Log-likelihood of a history under rate `lambda`; `-inf` for `lambda <= 0`.
pub fn censored_poisson_loglik(history: &TileHistory, lambda: f64, threshold: u32) -> f64 {
    history.stats().loglik_grad(lambda, threshold).0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Rates share an exponential prior whose scale is learned.
    Hierarchical,
    /// Rates get independent exponential priors with the fixed hyperprior scale.
    Independent,
}

/// Which tile fraction weights an imputed count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LandWeight {
    /// Inhabited land share, falling back to land share when absent.
    Inhabited,
    Land,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImputationSpec {
    pub censor_threshold: u32,
    pub hyperprior_scale: f64,
    pub pooling: Pooling,
}

impl Default for ImputationSpec {
    fn default() -> Self {
        ImputationSpec {
            censor_threshold: 10,
            hyperprior_scale: 5.0,
            pooling: Pooling::Hierarchical,
        }
    }
}

impl ImputationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.censor_threshold < 1 {
            return Err(Error::invalid("censor threshold must be >= 1"));
        }
        if !(self.hyperprior_scale > 0.0) {
            return Err(Error::invalid("hyperprior scale must be > 0"));
        }
        Ok(())
    }
}

/// Which observations enter the histories.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryFilter {
    pub window: u8,
    pub weekdays_only: bool,
}

impl Default for HistoryFilter {
    fn default() -> Self {
        // 16:00-24:00 UTC is the local night in UTC+8
        HistoryFilter {
            window: 2,
            weekdays_only: true,
        }
    }
}

/// Groups observations into per-tile histories, ordered by tile id then date.
pub fn build_histories(
    obs: &[TileObservation],
    filter: HistoryFilter,
    threshold: u32,
) -> Result<Vec<TileHistory>> {
    let mut by_tile: BTreeMap<&str, Vec<(NaiveDate, TileCount)>> = BTreeMap::new();
    for o in obs {
        if o.window != filter.window || (filter.weekdays_only && !o.is_weekday()) {
            continue;
        }
        by_tile.entry(o.tile_id.as_str()).or_default().push((o.date, o.count));
    }
    by_tile
        .into_iter()
        .map(|(id, mut entries)| {
            entries.sort_by_key(|(d, _)| *d);
            if entries.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::invalid(format!("tile {id}: duplicate entries for one date")));
            }
            TileHistory::new(id, entries.into_iter().map(|(_, c)| c).collect(), threshold)
        })
        .collect()
}
