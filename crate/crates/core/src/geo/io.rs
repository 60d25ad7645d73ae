//! File formats for tiles, tile observations and administrative units.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::geometry::{Coord, MultiPolygon, Polygon, Rect};
use super::harmonize::UnitShape;
use super::types::{GridTile, TileCount, TileObservation};
use crate::error::{Error, Result};
use crate::table;

#[derive(Debug, Serialize, Deserialize)]
struct TileRow {
    tile_id: String,
    min_lon: f64,
    min_lat: f64,
    max_lon: f64,
    max_lat: f64,
    land_fraction: f64,
    inhabited_fraction: Option<f64>,
}

pub fn read_tiles(path: &Path) -> Result<Vec<GridTile>> {
    let rows: Vec<TileRow> = table::read_csv(path)?;
    let mut seen = std::collections::BTreeSet::new();
    let mut tiles = Vec::with_capacity(rows.len());
    for (i, r) in rows.into_iter().enumerate() {
        let line = i as u64 + 2;
        if !seen.insert(r.tile_id.clone()) {
            return Err(Error::schema(path, line, format!("duplicate tile_id {}", r.tile_id)));
        }
        let tile = GridTile {
            tile_id: r.tile_id,
            bounds: Rect {
                min_x: r.min_lon,
                min_y: r.min_lat,
                max_x: r.max_lon,
                max_y: r.max_lat,
            },
            land_fraction: r.land_fraction,
            inhabited_fraction: r.inhabited_fraction,
        };
        tile.validate().map_err(|e| Error::schema(path, line, e.to_string()))?;
        tiles.push(tile);
    }
    Ok(tiles)
}

pub fn write_tiles(path: &Path, tiles: &[GridTile]) -> Result<()> {
    let rows: Vec<TileRow> = tiles
        .iter()
        .map(|t| TileRow {
            tile_id: t.tile_id.clone(),
            min_lon: t.bounds.min_x,
            min_lat: t.bounds.min_y,
            max_lon: t.bounds.max_x,
            max_lat: t.bounds.max_y,
            land_fraction: t.land_fraction,
            inhabited_fraction: t.inhabited_fraction,
        })
        .collect();
    table::write_csv(path, &rows)
}

#[derive(Debug, Serialize, Deserialize)]
struct ObservationRow {
    tile_id: String,
    date: String,
    window: u8,
    count: Option<u32>,
}

pub fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("bad date `{s}`: {e}"))
}

/// Reads observations; an empty count field means censored.
pub fn read_observations(path: &Path, threshold: u32) -> Result<Vec<TileObservation>> {
    let rows: Vec<ObservationRow> = table::read_csv(path)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let line = i as u64 + 2;
            let date = parse_date(&r.date).map_err(|m| Error::schema(path, line, m))?;
            let count = r.count.map_or(TileCount::Censored, TileCount::Observed);
            TileObservation::new(r.tile_id, date, r.window, count, threshold)
                .map_err(|e| Error::schema(path, line, e.to_string()))
        })
        .collect()
}

pub fn write_observations(path: &Path, obs: &[TileObservation]) -> Result<()> {
    let rows: Vec<ObservationRow> = obs
        .iter()
        .map(|o| ObservationRow {
            tile_id: o.tile_id.clone(),
            date: o.date.format("%Y-%m-%d").to_string(),
            window: o.window,
            count: o.count.observed(),
        })
        .collect();
    table::write_csv(path, &rows)
}

#[derive(Debug, Serialize, Deserialize)]
struct AttributeRow {
    unit_id: String,
    pop: u64,
    working_age_prop: f64,
}

fn parse_ring(v: &Value) -> Option<Vec<Coord>> {
    v.as_array()?
        .iter()
        .map(|p| {
            let p = p.as_array()?;
            Some([p.first()?.as_f64()?, p.get(1)?.as_f64()?])
        })
        .collect()
}

fn parse_polygon(v: &Value) -> Option<Polygon> {
    let rings = v.as_array()?;
    let mut iter = rings.iter();
    let exterior = parse_ring(iter.next()?)?;
    let holes = iter.map(parse_ring).collect::<Option<Vec<_>>>()?;
    Some(Polygon::with_holes(exterior, holes))
}

pub fn parse_geometry(geom: &Value) -> std::result::Result<MultiPolygon, String> {
    let kind = geom.get("type").and_then(Value::as_str).ok_or("geometry without type")?;
    let coords = geom.get("coordinates").ok_or("geometry without coordinates")?;
    match kind {
        "Polygon" => parse_polygon(coords)
            .map(MultiPolygon::single)
            .ok_or_else(|| "malformed Polygon coordinates".into()),
        "MultiPolygon" => coords
            .as_array()
            .and_then(|ps| ps.iter().map(parse_polygon).collect::<Option<Vec<_>>>())
            .map(MultiPolygon)
            .ok_or_else(|| "malformed MultiPolygon coordinates".into()),
        other => Err(format!("unsupported geometry type {other}")),
    }
}

/// Reads a GeoJSON FeatureCollection whose features carry a `unit_id`
/// property. Errors point at the 1-based feature index.
pub fn read_unit_polygons(path: &Path) -> Result<BTreeMap<String, MultiPolygon>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Error::schema(path, e.line() as u64, e.to_string()))?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::schema(path, 1, "expected a FeatureCollection with `features`"))?;
    let mut out = BTreeMap::new();
    for (i, f) in features.iter().enumerate() {
        let fail = |m: String| Error::schema(path, i as u64 + 1, format!("feature {}: {m}", i + 1));
        let id = match f.get("properties").and_then(|p| p.get("unit_id")) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(fail("missing properties.unit_id".into())),
        };
        let geom = f.get("geometry").ok_or_else(|| fail("missing geometry".into()))?;
        let poly = parse_geometry(geom).map_err(&fail)?;
        poly.validate().map_err(|e| fail(e.to_string()))?;
        if out.insert(id.clone(), poly).is_some() {
            return Err(fail(format!("duplicate unit_id {id}")));
        }
    }
    Ok(out)
}

fn ring_json(ring: &[Coord]) -> Value {
    let mut pts: Vec<Value> = ring.iter().map(|p| json!([p[0], p[1]])).collect();
    if let Some(first) = ring.first() {
        pts.push(json!([first[0], first[1]]));
    }
    Value::Array(pts)
}

pub fn geometry_json(poly: &MultiPolygon) -> Value {
    let polys: Vec<Value> = poly
        .polygons()
        .iter()
        .map(|p| {
            let mut rings = vec![ring_json(&p.exterior)];
            rings.extend(p.holes.iter().map(|h| ring_json(h)));
            Value::Array(rings)
        })
        .collect();
    json!({ "type": "MultiPolygon", "coordinates": polys })
}

pub fn write_unit_polygons(path: &Path, units: &[(String, MultiPolygon)]) -> Result<()> {
    let features: Vec<Value> = units
        .iter()
        .map(|(id, poly)| {
            json!({
                "type": "Feature",
                "properties": { "unit_id": id },
                "geometry": geometry_json(poly),
            })
        })
        .collect();
    let doc = json!({ "type": "FeatureCollection", "features": features });
    table::write_json(path, &doc)
}

/// Joins unit polygons with the attribute CSV (unit_id, pop, working_age_prop).
pub fn read_units(geojson: &Path, attributes: &Path) -> Result<Vec<UnitShape>> {
    let mut polys = read_unit_polygons(geojson)?;
    let rows: Vec<AttributeRow> = table::read_rows(attributes, |r: &AttributeRow, _| {
        if r.pop == 0 {
            return Err(format!("unit {}: pop must be >= 1", r.unit_id));
        }
        if !(r.working_age_prop > 0.0 && r.working_age_prop < 1.0) {
            return Err(format!(
                "unit {}: working_age_prop {} not in (0, 1)",
                r.unit_id, r.working_age_prop
            ));
        }
        Ok(())
    })?;
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.into_iter().enumerate() {
        let polygon = polys.remove(&r.unit_id).ok_or_else(|| {
            Error::schema(attributes, i as u64 + 2, format!("unit {} has no polygon", r.unit_id))
        })?;
        out.push(UnitShape {
            unit_id: r.unit_id,
            polygon,
            census_pop: r.pop,
            working_age_prop: r.working_age_prop,
        });
    }
    if let Some(id) = polys.keys().next() {
        log::warn!("{} polygons without attributes, first is {id}; ignored", polys.len());
    }
    Ok(out)
}

pub fn write_unit_attributes(path: &Path, units: &[UnitShape]) -> Result<()> {
    let rows: Vec<AttributeRow> = units
        .iter()
        .map(|u| AttributeRow {
            unit_id: u.unit_id.clone(),
            pop: u.census_pop,
            working_age_prop: u.working_age_prop,
        })
        .collect();
    table::write_csv(path, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observations_round_trip_with_censoring() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("obs.csv");
        let d = NaiveDate::from_ymd_opt(2020, 5, 4).unwrap();
        let obs = vec![
            TileObservation::new("a", d, 2, TileCount::Observed(14), 10).unwrap(),
            TileObservation::new("b", d, 2, TileCount::Censored, 10).unwrap(),
        ];
        write_observations(&p, &obs).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("b,2020-05-04,2,\n"), "{text}");
        assert_eq!(read_observations(&p, 10).unwrap(), obs);
    }

    #[test]
    fn observation_below_threshold_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("obs.csv");
        std::fs::write(&p, "tile_id,date,window,count\na,2020-05-04,2,12\nb,2020-05-04,2,3\n").unwrap();
        let err = read_observations(&p, 10).unwrap_err();
        assert!(err.to_string().contains("obs.csv:3"), "{err}");
    }

    #[test]
    fn units_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = dir.path().join("units.geojson");
        let a = dir.path().join("units.csv");
        let sq = MultiPolygon::single(Polygon::with_holes(
            vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]],
            vec![vec![[1.0, 1.0], [2.0, 1.0], [2.0, 2.0], [1.0, 2.0]]],
        ));
        write_unit_polygons(&g, &[("m1".into(), sq.clone())]).unwrap();
        let shapes = vec![UnitShape {
            unit_id: "m1".into(),
            polygon: sq.clone(),
            census_pop: 5000,
            working_age_prop: 0.62,
        }];
        write_unit_attributes(&a, &shapes).unwrap();
        let back = read_units(&g, &a).unwrap();
        assert_eq!(back, shapes);
        assert_eq!(back[0].polygon.area(), 15.0);
    }

    #[test]
    fn tiles_reject_bad_fractions() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tiles.csv");
        std::fs::write(
            &p,
            "tile_id,min_lon,min_lat,max_lon,max_lat,land_fraction,inhabited_fraction\n\
             t1,0,0,1,1,0.5,0.2\nt2,0,0,1,1,0.5,0.7\n",
        )
        .unwrap();
        let err = read_tiles(&p).unwrap_err();
        assert!(err.to_string().contains("tiles.csv:3"), "{err}");
    }
}
