//! Harmonizes simulated unit polygons with class, population and radiance
//! rasters, then spreads tile counts over the units.

use std::collections::BTreeMap;

use socialpop::geo::harmonize::{apportion_tile_counts, harmonize_unit};
use socialpop::simulate::{simulate_world, Layout, UnitSimConfig, WorldConfig};

fn main() -> socialpop::Result<()> {
    let cfg = WorldConfig {
        units: UnitSimConfig {
            n_units: 12,
            layout: Layout::Grid { cols: 3, rows: 4 },
            ..Default::default()
        },
        n_days: 10,
        ..Default::default()
    };
    let world = simulate_world(&cfg)?;
    let units = world
        .shapes
        .iter()
        .map(|s| harmonize_unit(s, &world.duc, &world.pop, &world.radiance))
        .collect::<socialpop::Result<Vec<_>>>()?;
    for u in &units {
        println!(
            "{}  {:<10} radiance {:7.3}  centroid ({:.4}, {:.4})",
            u.unit_id,
            u.duc.name(),
            u.radiance,
            u.centroid[0],
            u.centroid[1]
        );
    }
    // one count per tile: its true rate, rounded
    let counts: BTreeMap<String, f64> = world
        .truth
        .tiles
        .iter()
        .map(|t| (t.tile_id.clone(), t.lambda.round()))
        .collect();
    let app = apportion_tile_counts(&world.tiles, &counts, &units)?;
    println!(
        "tile total {:.0}, assigned {:.0}, orphaned {:.0}",
        app.total_input,
        app.total_assigned(),
        app.total_orphaned()
    );
    Ok(())
}
