//! The model-ready per-unit table.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::types::{AdminUnit, Duc};
use crate::error::{Error, Result};
use crate::table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// One row of the dataset CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub unit_id: String,
    pub duc: Duc,
    pub n: u64,
    pub fb: u64,
    pub w_std: f64,
    pub logl_std: f64,
    pub lon_std: f64,
    pub lat_std: f64,
    pub split: Split,
}

impl UnitRecord {
    pub fn rate(&self) -> f64 {
        self.fb as f64 / self.n as f64
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.lon_std, self.lat_std]
    }
}

/// Location and scale of one z-scored column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub mean: f64,
    pub sd: f64,
}

impl ZScore {
    /// Population SD over the selected values. A constant column keeps sd = 1.
    pub fn fit(values: &[f64], mask: &[bool]) -> Self {
        let picked: Vec<f64> = values
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| *v)
            .collect();
        if picked.is_empty() {
            return ZScore { mean: 0.0, sd: 1.0 };
        }
        let n = picked.len() as f64;
        let mean = picked.iter().sum::<f64>() / n;
        let var = picked.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd > 0.0 && sd.is_finite() {
            ZScore { mean, sd }
        } else {
            warn!("covariate has zero spread on the training units; leaving it unscaled");
            ZScore { mean, sd: 1.0 }
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.sd
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }
}

/// Constants frozen from the training split, written as the JSON sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub working_age: ZScore,
    pub log_radiance: ZScore,
    pub lon: ZScore,
    pub lat: ZScore,
    /// Value substituted for non-positive radiance, if any was needed.
    pub radiance_floor: Option<f64>,
    pub train_fraction: f64,
    pub split_seed: u64,
    /// Units whose rounded count exceeded their population.
    pub clamped_units: Vec<String>,
    /// Units dropped for lack of a user count.
    pub excluded_units: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitOptions {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            train_fraction: 0.8,
            seed: 2020,
        }
    }
}

/// Per class, shuffles the units and marks the first `round(f * n)` as train.
pub fn stratified_split(ducs: &[Duc], opts: SplitOptions) -> Result<Vec<Split>> {
    if !(opts.train_fraction > 0.0 && opts.train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction {} must lie in (0, 1)",
            opts.train_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = vec![Split::Test; ducs.len()];
    for d in Duc::ALL {
        let mut idx: Vec<usize> = (0..ducs.len()).filter(|&i| ducs[i] == d).collect();
        idx.shuffle(&mut rng);
        let n_train = (opts.train_fraction * idx.len() as f64).round() as usize;
        for &i in &idx[..n_train] {
            out[i] = Split::Train;
        }
    }
    Ok(out)
}

/// Raw covariates for one unit, before standardization.
#[derive(Clone, Debug, PartialEq)]
pub struct RawUnit {
    pub unit_id: String,
    pub duc: Duc,
    pub n: u64,
    pub working_age_prop: f64,
    pub radiance: f64,
    pub centroid: [f64; 2],
}

impl From<&AdminUnit> for RawUnit {
    fn from(u: &AdminUnit) -> Self {
        RawUnit {
            unit_id: u.unit_id.clone(),
            duc: u.duc,
            n: u.census_pop,
            working_age_prop: u.working_age_prop,
            radiance: u.radiance,
            centroid: u.centroid,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UptakeDataset {
    pub records: Vec<UnitRecord>,
    pub standardization: Standardization,
}

impl UptakeDataset {
    /// Splits and standardizes the units. User counts start at zero and are
    /// filled in by the caller.
    pub fn prepare(units: &[RawUnit], opts: SplitOptions) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::invalid("no units to build a dataset from"));
        }
        let ducs: Vec<Duc> = units.iter().map(|u| u.duc).collect();
        let split = stratified_split(&ducs, opts)?;
        let mask: Vec<bool> = split.iter().map(|s| *s == Split::Train).collect();

        let min_positive = units
            .iter()
            .map(|u| u.radiance)
            .filter(|&r| r > 0.0)
            .fold(f64::INFINITY, f64::min);
        let needs_floor = units.iter().any(|u| !(u.radiance > 0.0));
        let radiance_floor = if needs_floor {
            if !min_positive.is_finite() {
                return Err(Error::invalid("no unit has positive radiance"));
            }
            let floor = 0.5 * min_positive;
            warn!("replacing non-positive radiance with {floor}");
            Some(floor)
        } else {
            None
        };

        let w: Vec<f64> = units.iter().map(|u| u.working_age_prop).collect();
        let logl: Vec<f64> = units
            .iter()
            .map(|u| {
                if u.radiance > 0.0 {
                    u.radiance.ln()
                } else {
                    radiance_floor.unwrap_or(f64::NAN).ln()
                }
            })
            .collect();
        let lon: Vec<f64> = units.iter().map(|u| u.centroid[0]).collect();
        let lat: Vec<f64> = units.iter().map(|u| u.centroid[1]).collect();

        let standardization = Standardization {
            working_age: ZScore::fit(&w, &mask),
            log_radiance: ZScore::fit(&logl, &mask),
            lon: ZScore::fit(&lon, &mask),
            lat: ZScore::fit(&lat, &mask),
            radiance_floor,
            train_fraction: opts.train_fraction,
            split_seed: opts.seed,
            clamped_units: Vec::new(),
            excluded_units: Vec::new(),
        };
        let s = &standardization;
        let records = units
            .iter()
            .enumerate()
            .map(|(i, u)| UnitRecord {
                unit_id: u.unit_id.clone(),
                duc: u.duc,
                n: u.n,
                fb: 0,
                w_std: s.working_age.apply(w[i]),
                logl_std: s.log_radiance.apply(logl[i]),
                lon_std: s.lon.apply(lon[i]),
                lat_std: s.lat.apply(lat[i]),
                split: split[i],
            })
            .collect();
        Ok(UptakeDataset {
            records,
            standardization,
        })
    }

    pub fn train(&self) -> impl Iterator<Item = &UnitRecord> {
        self.records.iter().filter(|r| r.split == Split::Train)
    }

    pub fn test(&self) -> impl Iterator<Item = &UnitRecord> {
        self.records.iter().filter(|r| r.split == Split::Test)
    }

    pub fn subset(&self, split: Split) -> Vec<UnitRecord> {
        self.records.iter().filter(|r| r.split == split).cloned().collect()
    }

    pub fn write(&self, csv_path: &Path, sidecar_path: &Path) -> Result<()> {
        table::write_csv(csv_path, &self.records)?;
        table::write_json(sidecar_path, &self.standardization)
    }

    /// Reads the CSV and, when present, its sidecar.
    pub fn read(csv_path: &Path, sidecar_path: Option<&Path>) -> Result<Self> {
        let records: Vec<UnitRecord> = table::read_rows(csv_path, |r: &UnitRecord, _| {
            if r.n == 0 {
                return Err(format!("unit {}: n must be >= 1", r.unit_id));
            }
            if r.fb > r.n {
                return Err(format!("unit {}: fb {} exceeds n {}", r.unit_id, r.fb, r.n));
            }
            let finite = [r.w_std, r.logl_std, r.lon_std, r.lat_std].iter().all(|v| v.is_finite());
            if !finite {
                return Err(format!("unit {}: non-finite covariate", r.unit_id));
            }
            Ok(())
        })?;
        if records.is_empty() {
            return Err(Error::schema(csv_path, 1, "dataset has no rows"));
        }
        let standardization = match sidecar_path {
            Some(p) => table::read_json(p)?,
            None => Standardization {
                working_age: ZScore { mean: 0.0, sd: 1.0 },
                log_radiance: ZScore { mean: 0.0, sd: 1.0 },
                lon: ZScore { mean: 0.0, sd: 1.0 },
                lat: ZScore { mean: 0.0, sd: 1.0 },
                radiance_floor: None,
                train_fraction: f64::NAN,
                split_seed: 0,
                clamped_units: Vec::new(),
                excluded_units: Vec::new(),
            },
        };
        Ok(UptakeDataset {
            records,
            standardization,
        })
    }
}

/// Rounds an apportioned count half-to-even and clamps it to the population.
/// Returns the count and whether it was clamped.
pub fn round_user_count(count: f64, n: u64) -> Result<(u64, bool)> {
    if !(count >= 0.0) || !count.is_finite() {
        return Err(Error::invalid(format!("user count {count} is not a non-negative number")));
    }
    let r = count.round_ties_even() as u64;
    if r > n {
        Ok((n, true))
    } else {
        Ok((r, false))
    }
}

/// Joins harmonized units with their apportioned user counts.
pub fn build_dataset(
    units: &[AdminUnit],
    user_counts: &BTreeMap<String, f64>,
    opts: SplitOptions,
) -> Result<UptakeDataset> {
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for u in units {
        u.validate()?;
        if user_counts.contains_key(&u.unit_id) {
            kept.push(u);
        } else {
            warn!("unit {} has no user count; excluded", u.unit_id);
            excluded.push(u.unit_id.clone());
        }
    }
    let raw: Vec<RawUnit> = kept.iter().map(|u| RawUnit::from(*u)).collect();
    let mut ds = UptakeDataset::prepare(&raw, opts)?;
    for rec in &mut ds.records {
        let (fb, clamped) = round_user_count(user_counts[&rec.unit_id], rec.n)?;
        if clamped {
            warn!(
                "unit {}: user count {} exceeds population {}; clamped",
                rec.unit_id, user_counts[&rec.unit_id], rec.n
            );
            ds.standardization.clamped_units.push(rec.unit_id.clone());
        }
        rec.fb = fb;
    }
    ds.standardization.excluded_units = excluded;
    Ok(ds)
}
