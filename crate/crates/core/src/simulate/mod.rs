//! Synthetic data with known ground truth.

pub mod oracles;
pub mod tiles;
pub mod units;
pub mod world;

pub use tiles::{simulate_tiles, SimulatedTile, TileSimConfig};
pub use units::{matern_field, simulate_units, Layout, SimTruth, TruthParams, UnitSimConfig, UnitTruth};
pub use world::{simulate_world, World, WorldConfig, WorldFiles, WorldTruth};
