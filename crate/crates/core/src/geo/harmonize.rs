use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use super::geometry::{overlap_fraction, MultiPolygon};
use super::raster::RasterGrid;
use super::types::{AdminUnit, Duc, GridTile};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Apportionment {
    /// Apportioned (real-valued) user count per unit.
    pub unit_counts: BTreeMap<String, f64>,
    /// Tiles touching no unit, with their counts.
    pub orphans: BTreeMap<String, f64>,
    pub total_input: f64,
}

impl Apportionment {
    pub fn total_assigned(&self) -> f64 {
        self.unit_counts.values().sum()
    }

    pub fn total_orphaned(&self) -> f64 {
        self.orphans.values().sum()
    }
}

/// Splits each tile's count across the units it overlaps.
///
/// Units are taken to cover land only, so the part of a tile covered by units
/// is its land portion. The whole tile count is moved onto that portion and
/// shared in proportion to each unit's overlap, which conserves tile totals.
pub fn apportion_tile_counts(
    tiles: &[GridTile],
    counts: &BTreeMap<String, f64>,
    units: &[AdminUnit],
) -> Result<Apportionment> {
    let by_id: BTreeMap<&str, &GridTile> = tiles.iter().map(|t| (t.tile_id.as_str(), t)).collect();
    let bboxes: Vec<_> = units.iter().map(|u| u.polygon.bbox()).collect();

    let mut out = Apportionment::default();
    for u in units {
        out.unit_counts.insert(u.unit_id.clone(), 0.0);
    }
    for (tile_id, &count) in counts {
        let tile = by_id
            .get(tile_id.as_str())
            .ok_or_else(|| Error::invalid(format!("observation for unknown tile {tile_id}")))?;
        if !(count >= 0.0) || !count.is_finite() {
            return Err(Error::invalid(format!("tile {tile_id}: count {count} is not a non-negative number")));
        }
        out.total_input += count;

        let mut overlaps = Vec::new();
        for (u, bbox) in units.iter().zip(&bboxes) {
            match bbox {
                Some(b) if b.overlaps(&tile.bounds) => {}
                _ => continue,
            }
            let f = overlap_fraction(&tile.bounds, &u.polygon)?;
            if f > 0.0 {
                overlaps.push((u.unit_id.as_str(), f));
            }
        }
        let covered: f64 = overlaps.iter().map(|(_, f)| f).sum();
        if covered <= 0.0 {
            warn!("tile {tile_id} intersects no unit; {count} users left unassigned");
            out.orphans.insert(tile_id.clone(), count);
            continue;
        }
        for (id, f) in overlaps {
            *out.unit_counts.get_mut(id).expect("unit registered") += count * f / covered;
        }
    }
    Ok(out)
}

/// Degree of urbanisation class holding most inhabitants of the unit.
///
/// Each cell contributes its population times its overlap with the polygon.
/// Ties go to the lowest class code.
pub fn assign_duc(
    unit_id: &str,
    polygon: &MultiPolygon,
    duc_raster: &RasterGrid,
    pop_raster: &RasterGrid,
) -> Result<Duc> {
    if !duc_raster.aligned_with(pop_raster) {
        return Err(Error::invalid(
            "class and population rasters must share origin, size and cell size",
        ));
    }
    let totals = duc_contributions(polygon, duc_raster, pop_raster)?;
    let mut best: Option<(Duc, f64)> = None;
    for d in Duc::ALL {
        let v = totals[d.index()];
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((d, v));
        }
    }
    best.map(|(d, _)| d)
        .ok_or_else(|| Error::NoDucEvidence(unit_id.to_string()))
}

/// Population per class inside the polygon, indexed by `Duc::index`.
pub fn duc_contributions(
    polygon: &MultiPolygon,
    duc_raster: &RasterGrid,
    pop_raster: &RasterGrid,
) -> Result<[f64; 3]> {
    let mut totals = [0.0; 3];
    let Some(bbox) = polygon.bbox() else {
        return Ok(totals);
    };
    let Some((rows, cols)) = duc_raster.window(&bbox) else {
        return Ok(totals);
    };
    for r in rows {
        for c in cols.clone() {
            let (Some(code), Some(pop)) = (duc_raster.get(r, c), pop_raster.get(r, c)) else {
                continue;
            };
            let Some(duc) = Duc::from_raster_code(code) else {
                continue;
            };
            if pop <= 0.0 {
                continue;
            }
            let f = overlap_fraction(&duc_raster.cell_rect(r, c), polygon)?;
            totals[duc.index()] += pop * f;
        }
    }
    Ok(totals)
}

/// Unweighted mean of every radiance cell whose rectangle intersects the
/// polygon with positive area.
pub fn zonal_mean_radiance(unit_id: &str, polygon: &MultiPolygon, raster: &RasterGrid) -> Result<f64> {
    let none = || Error::NoRadianceCoverage(unit_id.to_string());
    let bbox = polygon.bbox().ok_or_else(none)?;
    let (rows, cols) = raster.window(&bbox).ok_or_else(none)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in rows {
        for c in cols.clone() {
            let Some(v) = raster.get(r, c) else { continue };
            if polygon.clipped_area(&raster.cell_rect(r, c)) > 0.0 {
                sum += v;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(none());
    }
    Ok(sum / n as f64)
}

/// Unit geometry and census attributes before raster harmonization.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitShape {
    pub unit_id: String,
    pub polygon: MultiPolygon,
    pub census_pop: u64,
    pub working_age_prop: f64,
}

/// Attaches class, radiance and centroid to a unit shape.
pub fn harmonize_unit(
    shape: &UnitShape,
    duc_raster: &RasterGrid,
    pop_raster: &RasterGrid,
    radiance_raster: &RasterGrid,
) -> Result<AdminUnit> {
    shape.polygon.validate()?;
    let duc = assign_duc(&shape.unit_id, &shape.polygon, duc_raster, pop_raster)?;
    let radiance = zonal_mean_radiance(&shape.unit_id, &shape.polygon, radiance_raster)?;
    let centroid = shape
        .polygon
        .centroid()
        .ok_or_else(|| Error::EmptyGeometry(format!("unit {}", shape.unit_id)))?;
    let unit = AdminUnit {
        unit_id: shape.unit_id.clone(),
        polygon: shape.polygon.clone(),
        census_pop: shape.census_pop,
        working_age_prop: shape.working_age_prop,
        duc,
        radiance,
        centroid,
    };
    unit.validate()?;
    Ok(unit)
}
