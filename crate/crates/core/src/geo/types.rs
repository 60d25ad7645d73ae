use std::fmt;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::geometry::{Coord, MultiPolygon, Rect};
use crate::error::{Error, Result};

/// Degree of urbanisation class, coded 1 = rural, 2 = peri-urban, 3 = urban.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Duc {
    Rural = 1,
    PeriUrban = 2,
    Urban = 3,
}

impl Duc {
    pub const ALL: [Duc; 3] = [Duc::Rural, Duc::PeriUrban, Duc::Urban];

    pub fn code(self) -> u8 {
        self as u8
    }

    /// Zero-based index for per-class parameter arrays.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn from_code(code: u8) -> Option<Duc> {
        match code {
            1 => Some(Duc::Rural),
            2 => Some(Duc::PeriUrban),
            3 => Some(Duc::Urban),
            _ => None,
        }
    }

    pub fn from_index(idx: usize) -> Duc {
        Duc::ALL[idx]
    }

    /// Raster class codes: the plain 1/2/3 coding, or settlement-model level-2
    /// codes (11–13 rural, 21–23 peri-urban, 30 urban centre). Water (10) and
    /// anything else carry no class.
    pub fn from_raster_code(value: f64) -> Option<Duc> {
        if value.fract() != 0.0 {
            return None;
        }
        match value as i64 {
            1 | 11 | 12 | 13 => Some(Duc::Rural),
            2 | 21 | 22 | 23 => Some(Duc::PeriUrban),
            3 | 30 => Some(Duc::Urban),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Duc::Rural => "rural",
            Duc::PeriUrban => "peri-urban",
            Duc::Urban => "urban",
        }
    }
}

impl From<Duc> for u8 {
    fn from(d: Duc) -> u8 {
        d.code()
    }
}

impl TryFrom<u8> for Duc {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Duc::from_code(v).ok_or_else(|| format!("invalid DUC code {v}"))
    }
}

impl fmt::Display for Duc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridTile {
    pub tile_id: String,
    pub bounds: Rect,
    /// Share of the tile area that is land.
    pub land_fraction: f64,
    /// Share of the tile area that is inhabited land; absent in some inputs.
    pub inhabited_fraction: Option<f64>,
}

impl GridTile {
    pub fn new(
        tile_id: impl Into<String>,
        bounds: Rect,
        land_fraction: f64,
        inhabited_fraction: Option<f64>,
    ) -> Result<Self> {
        let t = GridTile {
            tile_id: tile_id.into(),
            bounds,
            land_fraction,
            inhabited_fraction,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if !(0.0..=1.0).contains(&self.land_fraction) {
            return Err(Error::invalid(format!(
                "tile {}: land_fraction {} outside [0, 1]",
                self.tile_id, self.land_fraction
            )));
        }
        if let Some(inh) = self.inhabited_fraction {
            // small slack for fractions computed in floating point
            if !(0.0..=self.land_fraction + 1e-9).contains(&inh) {
                return Err(Error::invalid(format!(
                    "tile {}: inhabited_fraction {} outside [0, land_fraction = {}]",
                    self.tile_id, inh, self.land_fraction
                )));
            }
        }
        Ok(())
    }
}

/// Count reported for one tile and time window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TileCount {
    Observed(u32),
    Censored,
}

impl TileCount {
    pub fn observed(self) -> Option<u32> {
        match self {
            TileCount::Observed(c) => Some(c),
            TileCount::Censored => None,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, TileCount::Censored)
    }
}

/// Index of an 8-hour window, 0..=2, counted from midnight UTC.
pub const WINDOWS_PER_DAY: u8 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileObservation {
    pub tile_id: String,
    pub date: NaiveDate,
    pub window: u8,
    pub count: TileCount,
}

impl TileObservation {
    /// Observed counts below `threshold` cannot occur in censored data.
    pub fn new(
        tile_id: impl Into<String>,
        date: NaiveDate,
        window: u8,
        count: TileCount,
        threshold: u32,
    ) -> Result<Self> {
        let tile_id = tile_id.into();
        if window >= WINDOWS_PER_DAY {
            return Err(Error::invalid(format!(
                "tile {tile_id}: window {window} not in {{0, 1, 2}}"
            )));
        }
        if let TileCount::Observed(c) = count {
            if c < threshold {
                return Err(Error::invalid(format!(
                    "tile {tile_id}: observed count {c} below censoring threshold {threshold}"
                )));
            }
        }
        Ok(TileObservation {
            tile_id,
            date,
            window,
            count,
        })
    }

    pub fn is_weekday(&self) -> bool {
        !matches!(self.date.weekday(), Weekday::Sat | Weekday::Sun)
    }
}

/// Administrative unit with its harmonized covariates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdminUnit {
    pub unit_id: String,
    pub polygon: MultiPolygon,
    pub census_pop: u64,
    pub working_age_prop: f64,
    pub duc: Duc,
    /// Mean nighttime radiance. May be non-positive before the dataset
    /// builder applies its floor.
    pub radiance: f64,
    pub centroid: Coord,
}

impl AdminUnit {
    pub fn validate(&self) -> Result<()> {
        self.polygon.validate().map_err(|e| {
            Error::invalid(format!("unit {}: {e}", self.unit_id))
        })?;
        if self.census_pop == 0 {
            return Err(Error::invalid(format!(
                "unit {}: census population must be >= 1",
                self.unit_id
            )));
        }
        if !(self.working_age_prop > 0.0 && self.working_age_prop < 1.0) {
            return Err(Error::invalid(format!(
                "unit {}: working-age proportion {} not in (0, 1)",
                self.unit_id, self.working_age_prop
            )));
        }
        if !self.radiance.is_finite() {
            return Err(Error::invalid(format!(
                "unit {}: radiance not finite",
                self.unit_id
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duc_codes_round_trip() {
        for d in Duc::ALL {
            assert_eq!(Duc::from_code(d.code()), Some(d));
            assert_eq!(Duc::from_index(d.index()), d);
        }
        assert_eq!(Duc::from_raster_code(30.0), Some(Duc::Urban));
        assert_eq!(Duc::from_raster_code(22.0), Some(Duc::PeriUrban));
        assert_eq!(Duc::from_raster_code(10.0), None);
        assert_eq!(Duc::from_raster_code(1.5), None);
    }

    #[test]
    fn observation_invariants() {
        let d = NaiveDate::from_ymd_opt(2020, 5, 4).unwrap();
        assert!(TileObservation::new("t", d, 3, TileCount::Censored, 10).is_err());
        assert!(TileObservation::new("t", d, 2, TileCount::Observed(9), 10).is_err());
        let ok = TileObservation::new("t", d, 2, TileCount::Observed(10), 10).unwrap();
        assert!(ok.is_weekday());
    }

    #[test]
    fn tile_fraction_invariants() {
        let r = Rect::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(GridTile::new("a", r, 0.5, Some(0.6)).is_err());
        assert!(GridTile::new("a", r, 1.2, None).is_err());
        assert!(GridTile::new("a", r, 0.5, Some(0.4)).is_ok());
    }
}
