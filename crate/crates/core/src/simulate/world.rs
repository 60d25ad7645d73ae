//! A synthetic region in the raw input formats: unit polygons and census
//! attributes, class/population/radiance rasters, tiles and censored
//! nightly tile counts.

use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::tiles::{censor, poisson};
use super::units::{simulate_units, Layout, SimTruth, UnitSimConfig, GRID_ORIGIN, GRID_STEP};
use crate::error::{Error, Result};
use crate::geo::io::{write_observations, write_tiles, write_unit_attributes, write_unit_polygons};
use crate::geo::{GridTile, MultiPolygon, RasterGrid, Rect, TileObservation, UnitShape};
use crate::table;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub units: UnitSimConfig,
    /// Tiles per unit edge (a power of two keeps edges exact).
    pub tiles_per_side: usize,
    /// Raster cells per unit edge.
    pub cells_per_side: usize,
    pub n_days: usize,
    pub start_date: NaiveDate,
    pub window: u8,
    pub threshold: u32,
    /// Dirichlet concentration of a unit's users across its tiles; small
    /// values leave some tiles nearly empty, hence censored.
    pub tile_concentration: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            units: UnitSimConfig {
                n_units: 300,
                layout: Layout::Grid { cols: 10, rows: 30 },
                ..Default::default()
            },
            tiles_per_side: 2,
            cells_per_side: 4,
            n_days: 151,
            start_date: NaiveDate::from_ymd_opt(2020, 3, 1).expect("valid date"),
            window: 2,
            threshold: 10,
            tile_concentration: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileTruth {
    pub tile_id: String,
    pub unit_id: String,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldTruth {
    #[serde(flatten)]
    pub units: SimTruth,
    pub tiles: Vec<TileTruth>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub shapes: Vec<UnitShape>,
    pub duc: RasterGrid,
    pub pop: RasterGrid,
    pub radiance: RasterGrid,
    pub tiles: Vec<GridTile>,
    pub observations: Vec<TileObservation>,
    pub truth: WorldTruth,
}

/// File names written by [`World::write`].
pub struct WorldFiles {
    pub units_geojson: PathBuf,
    pub unit_attributes: PathBuf,
    pub duc_raster: PathBuf,
    pub pop_raster: PathBuf,
    pub radiance_raster: PathBuf,
    pub tiles: PathBuf,
    pub observations: PathBuf,
    pub truth: PathBuf,
}

impl WorldFiles {
    pub fn in_dir(dir: &Path) -> Self {
        WorldFiles {
            units_geojson: dir.join("units.geojson"),
            unit_attributes: dir.join("unit_attributes.csv"),
            duc_raster: dir.join("duc.asc"),
            pop_raster: dir.join("population.asc"),
            radiance_raster: dir.join("radiance.asc"),
            tiles: dir.join("tiles.csv"),
            observations: dir.join("observations.csv"),
            truth: dir.join("truth.json"),
        }
    }
}

impl World {
    pub fn write(&self, dir: &Path) -> Result<WorldFiles> {
        table::ensure_dir(dir)?;
        let f = WorldFiles::in_dir(dir);
        let polys: Vec<(String, MultiPolygon)> =
            self.shapes.iter().map(|s| (s.unit_id.clone(), s.polygon.clone())).collect();
        write_unit_polygons(&f.units_geojson, &polys)?;
        write_unit_attributes(&f.unit_attributes, &self.shapes)?;
        self.duc.write_ascii(&f.duc_raster)?;
        self.pop.write_ascii(&f.pop_raster)?;
        self.radiance.write_ascii(&f.radiance_raster)?;
        write_tiles(&f.tiles, &self.tiles)?;
        write_observations(&f.observations, &self.observations)?;
        table::write_json(&f.truth, &self.truth)?;
        Ok(f)
    }
}

// raster class codes written for each class
const DUC_RASTER_CODES: [f64; 3] = [11.0, 21.0, 30.0];

pub fn simulate_world(cfg: &WorldConfig) -> Result<World> {
    let (cols, rows) = match cfg.units.layout {
        Layout::Grid { cols, rows } => (cols, rows),
        Layout::Scatter => return Err(Error::invalid("a world needs a grid layout")),
    };
    if cfg.tiles_per_side == 0 || cfg.cells_per_side == 0 || cfg.n_days == 0 {
        return Err(Error::invalid("tiles_per_side, cells_per_side and n_days must be >= 1"));
    }
    if !(cfg.tile_concentration > 0.0) {
        return Err(Error::invalid("tile_concentration must be > 0"));
    }
    let (_, truth) = simulate_units(&cfg.units)?;

    let cps = cfg.cells_per_side;
    let cell = GRID_STEP / cps as f64;
    let (ncols, nrows) = (cols * cps, rows * cps);
    let mut duc = RasterGrid::new(ncols, nrows, GRID_ORIGIN[0], GRID_ORIGIN[1], cell, Some(-9999.0), vec![-9999.0; ncols * nrows])?;
    let mut pop = duc.clone();
    let mut radiance = duc.clone();
    let mut shapes = Vec::with_capacity(truth.units.len());
    for (i, u) in truth.units.iter().enumerate() {
        let rect = cfg.units.layout.cell(i).ok_or_else(|| Error::invalid("grid cell out of range"))?;
        shapes.push(UnitShape {
            unit_id: u.unit_id.clone(),
            polygon: MultiPolygon::from_rect(&rect),
            census_pop: u.n,
            working_age_prop: u.working_age_prop,
        });
        let (c0, r0) = ((i % cols) * cps, (i / cols) * cps);
        for dr in 0..cps {
            for dc in 0..cps {
                // raster rows run north to south
                let row = nrows - 1 - (r0 + dr);
                let col = c0 + dc;
                duc.set(row, col, DUC_RASTER_CODES[u.duc.index()]);
                pop.set(row, col, u.n as f64 / (cps * cps) as f64);
                radiance.set(row, col, u.radiance);
            }
        }
    }

    let tps = cfg.tiles_per_side;
    let tile_step = GRID_STEP / tps as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.units.seed);
    rng.set_stream(3);
    let gamma = Gamma::new(cfg.tile_concentration, 1.0).map_err(|e| Error::invalid(e.to_string()))?;
    let dates: Vec<NaiveDate> = (0..cfg.n_days as u64)
        .map(|d| cfg.start_date.checked_add_days(Days::new(d)).ok_or_else(|| Error::invalid("date overflow")))
        .collect::<Result<_>>()?;
    let mut tiles = Vec::new();
    let mut tile_truth = Vec::new();
    let mut observations = Vec::with_capacity(truth.units.len() * tps * tps * cfg.n_days);
    for (i, u) in truth.units.iter().enumerate() {
        let rect = cfg.units.layout.cell(i).ok_or_else(|| Error::invalid("grid cell out of range"))?;
        let g: Vec<f64> = (0..tps * tps).map(|_| gamma.sample(&mut rng)).collect();
        let total: f64 = g.iter().sum();
        for (t, gt) in g.iter().enumerate() {
            let (tx, ty) = ((t % tps) as f64, (t / tps) as f64);
            let x = rect.min_x + tx * tile_step;
            let y = rect.min_y + ty * tile_step;
            let tile_id = format!("{}_{t}", u.unit_id);
            let lambda = if total > 0.0 { u.fb as f64 * gt / total } else { 0.0 };
            tiles.push(GridTile::new(tile_id.clone(), Rect::new(x, y, x + tile_step, y + tile_step)?, 1.0, Some(1.0))?);
            for d in &dates {
                let count = censor(poisson(lambda, &mut rng), cfg.threshold);
                observations.push(TileObservation::new(tile_id.clone(), *d, cfg.window, count, cfg.threshold)?);
            }
            tile_truth.push(TileTruth {
                tile_id,
                unit_id: u.unit_id.clone(),
                lambda,
            });
        }
    }
    Ok(World {
        shapes,
        duc,
        pop,
        radiance,
        tiles,
        observations,
        truth: WorldTruth {
            units: truth,
            tiles: tile_truth,
        },
    })
}
