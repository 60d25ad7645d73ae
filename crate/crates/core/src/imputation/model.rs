use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::likelihood::HistoryStats;
use super::{ImputationSpec, Pooling, TileHistory};
use crate::error::{Error, Result};
use crate::sampler::LogDensity;

/// Where a tile's rate lives in the parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateSlot {
    /// Tile with at least one observed entry: its own rate.
    Individual(usize),
    /// All-censored tile: the rate shared by tiles with this many entries.
    Group { n_entries: usize, slot: usize },
}

impl RateSlot {
    pub fn index(self) -> usize {
        match self {
            RateSlot::Individual(i) | RateSlot::Group { slot: i, .. } => i,
        }
    }
}

/// Joint density over log rates (and the log prior scale when hierarchical).
///
/// Unconstrained layout: `[ln s]` (hierarchical only), then one `ln λ` per
/// rate slot. Every partially observed tile has a slot; all-censored tiles
/// share one slot per entry count.
#[derive(Clone, Debug)]
pub struct ImputationModel {
    pub spec: ImputationSpec,
    /// Sufficient statistics per rate slot.
    slots: Vec<HistoryStats>,
    slot_names: Vec<String>,
    tile_slots: BTreeMap<String, RateSlot>,
    groups: BTreeMap<usize, usize>,
}

impl ImputationModel {
    pub fn new(histories: &[TileHistory], spec: ImputationSpec) -> Result<Self> {
        spec.validate()?;
        if histories.is_empty() {
            return Err(Error::invalid("imputation model needs at least one tile history"));
        }
        let mut slots = Vec::new();
        let mut slot_names = Vec::new();
        let mut tile_slots = BTreeMap::new();
        let mut groups: BTreeMap<usize, usize> = BTreeMap::new();
        for h in histories {
            let stats = h.stats();
            if let Some(c) = h.counts.iter().filter_map(|c| c.observed()).find(|&c| c < spec.censor_threshold) {
                return Err(Error::invalid(format!(
                    "tile {}: observed count {c} below threshold {}",
                    h.tile_id, spec.censor_threshold
                )));
            }
            let slot = if stats.all_censored() {
                let n = h.n_entries();
                let idx = *groups.entry(n).or_insert_with(|| {
                    slots.push(stats);
                    slot_names.push(format!("lambda[group_{n}]"));
                    slots.len() - 1
                });
                RateSlot::Group {
                    n_entries: n,
                    slot: idx,
                }
            } else {
                slots.push(stats);
                slot_names.push(format!("lambda[{}]", h.tile_id));
                RateSlot::Individual(slots.len() - 1)
            };
            if tile_slots.insert(h.tile_id.clone(), slot).is_some() {
                return Err(Error::invalid(format!("duplicate history for tile {}", h.tile_id)));
            }
        }
        Ok(ImputationModel {
            spec,
            slots,
            slot_names,
            tile_slots,
            groups,
        })
    }

    fn offset(&self) -> usize {
        match self.spec.pooling {
            Pooling::Hierarchical => 1,
            Pooling::Independent => 0,
        }
    }

    pub fn n_rates(&self) -> usize {
        self.slots.len()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn slot_of(&self, tile_id: &str) -> Option<RateSlot> {
        self.tile_slots.get(tile_id).copied()
    }

    /// Slot of the group for all-censored tiles with `n_entries` entries.
    pub fn group_slot(&self, n_entries: usize) -> Option<RateSlot> {
        self.groups.get(&n_entries).map(|&slot| RateSlot::Group { n_entries, slot })
    }

    pub fn tile_slots(&self) -> &BTreeMap<String, RateSlot> {
        &self.tile_slots
    }

    /// Column of slot `slot` in constrained draws.
    pub fn rate_column(&self, slot: usize) -> usize {
        self.offset() + slot
    }

    pub fn rate_name(&self, slot: usize) -> &str {
        &self.slot_names[slot]
    }
}

impl LogDensity for ImputationModel {
    fn dim(&self) -> usize {
        self.offset() + self.slots.len()
    }

    fn log_density_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let k = self.spec.censor_threshold;
        let h = self.spec.hyperprior_scale;
        let off = self.offset();
        let (s, mut lp) = match self.spec.pooling {
            Pooling::Hierarchical => {
                let s = theta[0].exp();
                // Exp(scale h) on s, plus the log-transform Jacobian
                (s, -h.ln() - s / h + theta[0])
            }
            Pooling::Independent => (h, 0.0),
        };
        let mut d_s = 0.0;
        for (i, stats) in self.slots.iter().enumerate() {
            let u = theta[off + i];
            let lambda = u.exp();
            let (ll, d_ll) = stats.loglik_grad(lambda, k);
            lp += ll - s.ln() - lambda / s + u;
            grad[off + i] = lambda * (d_ll - 1.0 / s) + 1.0;
            d_s += -1.0 / s + lambda / (s * s);
        }
        if off == 1 {
            grad[0] = s * (d_s - 1.0 / h) + 1.0;
        }
        if lp.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp
        }
    }

    fn parameter_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        if self.offset() == 1 {
            names.push("s".to_string());
        }
        names.extend(self.slot_names.iter().cloned());
        names
    }

    fn constrain(&self, theta: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(theta.iter().map(|v| v.exp()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::TileCount;

    #[test]
    fn all_censored_tiles_share_a_group_rate() {
        let c = TileCount::Censored;
        let hs = vec![
            TileHistory::new("a", vec![c; 151], 10).unwrap(),
            TileHistory::new("b", vec![c; 151], 10).unwrap(),
            TileHistory::new("c", vec![c; 75], 10).unwrap(),
            TileHistory::new("d", vec![TileCount::Observed(12), c], 10).unwrap(),
        ];
        let m = ImputationModel::new(&hs, ImputationSpec::default()).unwrap();
        assert_eq!(m.n_rates(), 3);
        assert_eq!(m.n_groups(), 2);
        assert_eq!(m.dim(), 4);
        assert_eq!(m.slot_of("a"), m.slot_of("b"));
        assert_ne!(m.slot_of("a"), m.slot_of("c"));
        assert!(matches!(m.slot_of("d"), Some(RateSlot::Individual(_))));
    }

    #[test]
    fn two_equal_length_censored_tiles_add_one_rate() {
        let hs = vec![
            TileHistory::new("a", vec![TileCount::Censored; 20], 10).unwrap(),
            TileHistory::new("b", vec![TileCount::Censored; 20], 10).unwrap(),
        ];
        let m = ImputationModel::new(&hs, ImputationSpec::default()).unwrap();
        assert_eq!(m.n_rates(), 1);
    }

    #[test]
    fn no_histories_is_an_error() {
        assert!(ImputationModel::new(&[], ImputationSpec::default()).is_err());
    }
}
