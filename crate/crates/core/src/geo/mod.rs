//! Harmonizing tile counts and rasters onto administrative units.

pub mod dataset;
pub mod geometry;
pub mod harmonize;
pub mod io;
pub mod raster;
pub mod types;

pub use dataset::{build_dataset, RawUnit, Split, SplitOptions, Standardization, UnitRecord, UptakeDataset, ZScore};
pub use geometry::{overlap_fraction, Coord, MultiPolygon, Polygon, Rect};
pub use harmonize::{
    apportion_tile_counts, assign_duc, harmonize_unit, zonal_mean_radiance, Apportionment,
    UnitShape,
};
pub use raster::RasterGrid;
pub use types::{AdminUnit, Duc, GridTile, TileCount, TileObservation};
