use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::model::{ImputationModel, RateSlot};
use super::{LandWeight, TileHistory};
use crate::error::{Error, Result};
use crate::geo::{GridTile, TileCount, TileObservation};
use crate::sampler::PosteriorDraws;
use crate::special::median;
use crate::table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "individual-posterior")]
    Individual,
    #[serde(rename = "group-posterior")]
    Group,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImputedCount {
    pub tile_id: String,
    pub reference_timestamp: String,
    pub imputed_count: f64,
    pub provenance: Provenance,
}

/// One imputation run: a single joint posterior draw shared by every tile.
#[derive(Clone, Debug, PartialEq)]
pub struct ImputedCounts {
    pub draw_index: usize,
    pub rows: Vec<ImputedCount>,
}

impl ImputedCounts {
    pub fn as_map(&self) -> BTreeMap<String, f64> {
        self.rows
            .iter()
            .map(|r| (r.tile_id.clone(), r.imputed_count))
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        table::write_csv(path, &self.rows)
    }

    pub fn read(path: &Path) -> Result<Vec<ImputedCount>> {
        table::read_rows(path, |r: &ImputedCount, _| {
            if r.imputed_count >= 0.0 && r.imputed_count.is_finite() {
                Ok(())
            } else {
                Err(format!("tile {}: imputed count must be >= 0", r.tile_id))
            }
        })
    }
}

/// Timestamp label for a date and 8-hour window, e.g. `2020-05-04T16:00Z`.
pub fn reference_timestamp(date: NaiveDate, window: u8) -> String {
    format!("{}T{:02}:00Z", date.format("%Y-%m-%d"), 8 * window as u32)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImputeOptions {
    pub reference_date: NaiveDate,
    pub window: u8,
    pub weight: LandWeight,
    pub seed: u64,
    pub imputations: usize,
}

/// Tiles censored (or absent) at the reference timestamp, in id order.
pub fn censored_on_reference<'a>(
    tiles: &'a [GridTile],
    obs: &[TileObservation],
    date: NaiveDate,
    window: u8,
) -> Vec<&'a GridTile> {
    let observed: std::collections::BTreeSet<&str> = obs
        .iter()
        .filter(|o| o.date == date && o.window == window && !o.count.is_censored())
        .map(|o| o.tile_id.as_str())
        .collect();
    let mut out: Vec<&GridTile> = tiles
        .iter()
        .filter(|t| !observed.contains(t.tile_id.as_str()))
        .collect();
    out.sort_by(|a, b| a.tile_id.cmp(&b.tile_id));
    out
}

fn tile_weight(tile: &GridTile, weight: LandWeight) -> f64 {
    match weight {
        LandWeight::Inhabited => tile.inhabited_fraction.unwrap_or(tile.land_fraction),
        LandWeight::Land => tile.land_fraction,
    }
}

fn poisson_draw(lambda: f64, rng: &mut ChaCha8Rng) -> f64 {
    if !(lambda > 0.0) {
        return 0.0;
    }
    match Poisson::new(lambda) {
        Ok(d) => d.sample(rng),
        Err(_) => lambda.round(),
    }
}

/// Draws `opts.imputations` imputed count sets. Each set picks one posterior
/// draw uniformly at random, then gives every censored tile an independent
/// Poisson count at that draw's rate, scaled by the tile's land weight.
pub fn impute(
    draws: &PosteriorDraws,
    model: &ImputationModel,
    tiles: &[GridTile],
    obs: &[TileObservation],
    opts: &ImputeOptions,
) -> Result<Vec<ImputedCounts>> {
    if draws.n_draws() == 0 {
        return Err(Error::invalid("no posterior draws to impute from"));
    }
    let targets = censored_on_reference(tiles, obs, opts.reference_date, opts.window);
    let mut resolved = Vec::with_capacity(targets.len());
    for t in &targets {
        let slot = model
            .slot_of(&t.tile_id)
            .ok_or_else(|| Error::UnmatchedTile(t.tile_id.clone()))?;
        resolved.push((*t, slot));
    }
    let stamp = reference_timestamp(opts.reference_date, opts.window);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut runs = Vec::with_capacity(opts.imputations.max(1));
    for _ in 0..opts.imputations.max(1) {
        let k = rng.random_range(0..draws.n_draws());
        let draw = draws.flat_draw(k);
        let rows = resolved
            .iter()
            .map(|(tile, slot)| {
                let lambda = draw[model.rate_column(slot.index())];
                let count = poisson_draw(lambda, &mut rng);
                ImputedCount {
                    tile_id: tile.tile_id.clone(),
                    reference_timestamp: stamp.clone(),
                    imputed_count: count * tile_weight(tile, opts.weight),
                    provenance: match slot {
                        RateSlot::Individual(_) => Provenance::Individual,
                        RateSlot::Group { .. } => Provenance::Group,
                    },
                }
            })
            .collect();
        runs.push(ImputedCounts { draw_index: k, rows });
    }
    Ok(runs)
}

/// Counts at the reference timestamp: observed where available, imputed
/// otherwise. Tiles with neither are an error.
pub fn reference_counts(
    tiles: &[GridTile],
    obs: &[TileObservation],
    imputed: &BTreeMap<String, f64>,
    date: NaiveDate,
    window: u8,
) -> Result<BTreeMap<String, f64>> {
    let mut observed = BTreeMap::new();
    for o in obs.iter().filter(|o| o.date == date && o.window == window) {
        if let TileCount::Observed(c) = o.count {
            observed.insert(o.tile_id.as_str(), c as f64);
        }
    }
    tiles
        .iter()
        .map(|t| {
            let v = observed
                .get(t.tile_id.as_str())
                .copied()
                .or_else(|| imputed.get(&t.tile_id).copied())
                .ok_or_else(|| Error::UnmatchedTile(t.tile_id.clone()))?;
            Ok((t.tile_id.clone(), v))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpcRow {
    pub tile_id: String,
    pub n_entries: usize,
    pub n_observed: usize,
    pub predictive_median: f64,
    pub observed_median: Option<f64>,
    pub difference: Option<f64>,
}

/// Posterior-predictive median per tile (one Poisson draw per posterior
/// draw) against the median of the tile's observed entries.
pub fn imputation_ppc(
    draws: &PosteriorDraws,
    model: &ImputationModel,
    histories: &[TileHistory],
    seed: u64,
) -> Result<Vec<PpcRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    histories
        .iter()
        .map(|h| {
            let slot = model
                .slot_of(&h.tile_id)
                .ok_or_else(|| Error::UnmatchedTile(h.tile_id.clone()))?;
            let col = model.rate_column(slot.index());
            let samples: Vec<f64> = (0..draws.n_draws())
                .map(|k| poisson_draw(draws.flat_draw(k)[col], &mut rng))
                .collect();
            let predictive_median = median(&samples).unwrap_or(f64::NAN);
            let observed = h.observed_values();
            let observed_median = median(&observed);
            Ok(PpcRow {
                tile_id: h.tile_id.clone(),
                n_entries: h.n_entries(),
                n_observed: observed.len(),
                predictive_median,
                observed_median,
                difference: observed_median.map(|m| predictive_median - m),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Rect;
    use crate::imputation::ImputationSpec;

    fn setup() -> (ImputationModel, Vec<GridTile>, PosteriorDraws) {
        let c = TileCount::Censored;
        let hs = vec![
            TileHistory::new("a", vec![c; 5], 10).unwrap(),
            TileHistory::new("b", vec![c; 5], 10).unwrap(),
            TileHistory::new("z", vec![TileCount::Observed(20), c], 10).unwrap(),
        ];
        let model = ImputationModel::new(&hs, ImputationSpec::default()).unwrap();
        let r = Rect::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let tiles = vec![
            GridTile::new("a", r, 1.0, Some(0.0)).unwrap(),
            GridTile::new("b", r, 1.0, Some(1.0)).unwrap(),
            GridTile::new("z", r, 0.5, None).unwrap(),
        ];
        // columns: s, lambda[group_5], lambda[z]
        let draws = PosteriorDraws::new(
            crate::sampler::LogDensity::parameter_names(&model),
            1,
            2,
            vec![5.0, 3.0, 15.0, 5.0, 3.0, 15.0],
        )
        .unwrap();
        (model, tiles, draws)
    }

    fn opts(seed: u64) -> ImputeOptions {
        ImputeOptions {
            reference_date: NaiveDate::from_ymd_opt(2020, 5, 4).unwrap(),
            window: 2,
            weight: LandWeight::Inhabited,
            seed,
            imputations: 1,
        }
    }

    #[test]
    fn zero_weight_tile_imputes_zero() {
        let (m, tiles, d) = setup();
        let out = impute(&d, &m, &tiles, &[], &opts(1)).unwrap();
        let map = out[0].as_map();
        assert_eq!(map["a"], 0.0);
        assert_eq!(out[0].rows[0].reference_timestamp, "2020-05-04T16:00Z");
        assert_eq!(out[0].rows[2].provenance, Provenance::Individual);
        assert_eq!(out[0].rows[1].provenance, Provenance::Group);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let (m, tiles, d) = setup();
        let a = impute(&d, &m, &tiles, &[], &opts(9)).unwrap();
        let b = impute(&d, &m, &tiles, &[], &opts(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_tile_is_unmatched() {
        let (m, mut tiles, d) = setup();
        tiles.push(GridTile::new("q", Rect::new(0.0, 0.0, 1.0, 1.0).unwrap(), 1.0, None).unwrap());
        assert!(matches!(
            impute(&d, &m, &tiles, &[], &opts(1)),
            Err(Error::UnmatchedTile(id)) if id == "q"
        ));
    }

    #[test]
    fn observed_reference_counts_win_over_imputed() {
        let (_, tiles, _) = setup();
        let date = NaiveDate::from_ymd_opt(2020, 5, 4).unwrap();
        let obs = vec![TileObservation::new("z", date, 2, TileCount::Observed(33), 10).unwrap()];
        let imputed: BTreeMap<String, f64> =
            [("a".to_string(), 0.0), ("b".to_string(), 4.0)].into_iter().collect();
        let got = reference_counts(&tiles, &obs, &imputed, date, 2).unwrap();
        assert_eq!(got["z"], 33.0);
        assert_eq!(got["b"], 4.0);
    }
}
